//! Criterion benchmarks for the dpkf filters live under `benches/`.

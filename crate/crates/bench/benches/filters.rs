use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use dpkf_core::estimators::{EstimatorKind, EstimatorParams, Filter, GaussianBelief, LinearSystem, SimRng};
use dpkf_core::noise::preset;
use dpkf_core::simulation::simulate;
use dpkf_core::{SymPdMatrix, Vector};
use rand::SeedableRng;

fn per_step(c: &mut Criterion) {
    let system = LinearSystem::rotation_benchmark(preset("impulsive_gm").unwrap()).unwrap();
    let initial = GaussianBelief::new(Vector::zeros(2), SymPdMatrix::identity(2)).unwrap();
    let traj = simulate(&system, &initial, 200, &mut SimRng::seed_from_u64(1));
    let params = EstimatorParams::default();

    let mut group = c.benchmark_group("step");
    for kind in EstimatorKind::ALL {
        group.bench_function(kind.name(), |b| {
            b.iter_batched(
                || {
                    let mut rng = SimRng::seed_from_u64(2);
                    let filter = Filter::new(kind, params, &system, &initial, &mut rng).unwrap();
                    (filter, rng)
                },
                |(mut filter, mut rng)| {
                    for y in &traj.measurements[..20] {
                        black_box(filter.step(&system, y, &mut rng).unwrap());
                    }
                },
                BatchSize::SmallInput,
            )
        });
    }
    group.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = per_step
}
criterion_main!(benches);

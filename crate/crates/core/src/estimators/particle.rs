//! Bootstrap particle filter with systematic resampling.

use rand::Rng;

use super::LinearSystem;
use crate::linalg::{Matrix, Vector};

/// Equally weighted particles stored column-major in a flat buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleCloud {
    n: usize,
    states: Vec<f64>,
    weights: Vec<f64>,
}

/// Weighted moments of the cloud before resampling.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSummary {
    pub mean: Vector,
    pub cov: Matrix,
    /// Every weight underflowed and the cloud fell back to uniform weights.
    pub degenerate: bool,
}

impl ParticleCloud {
    /// Draws `count` particles from `N(mean, cov)`.
    pub fn from_gaussian<R: Rng + ?Sized>(mean: &Vector, cov_factor: &Matrix, count: usize, rng: &mut R) -> Self {
        let n = mean.len();
        let mut states = Vec::with_capacity(n * count);
        let mut z = Vector::zeros(n);
        for _ in 0..count {
            z.iter_mut().for_each(|zi| *zi = rng.sample(rand_distr::StandardNormal));
            states.extend((mean + cov_factor * &z).iter());
        }
        Self::from_states(n, states)
    }

    pub fn from_states(n: usize, states: Vec<f64>) -> Self {
        assert!(
            n > 0 && !states.is_empty() && states.len().is_multiple_of(n),
            "bad particle buffer"
        );
        let count = states.len() / n;
        Self {
            n,
            states,
            weights: vec![1.0 / count as f64; count],
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn state_dim(&self) -> usize {
        self.n
    }

    pub fn particle(&self, i: usize) -> &[f64] {
        &self.states[i * self.n..(i + 1) * self.n]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `x ← A x + w` for every particle.
    pub fn propagate<R: Rng + ?Sized>(&mut self, system: &LinearSystem, w_factor: &Matrix, rng: &mut R) {
        let n = self.n;
        let a = &system.a;
        let mu = &system.process_noise.mean;
        let mut z = vec![0.0; n];
        let mut x = vec![0.0; n];
        for p in self.states.chunks_exact_mut(n) {
            z.iter_mut().for_each(|zi| *zi = rng.sample(rand_distr::StandardNormal));
            for r in 0..n {
                let mut acc = mu[r];
                for c in 0..n {
                    acc += a[(r, c)] * p[c];
                }
                for c in 0..=r {
                    acc += w_factor[(r, c)] * z[c];
                }
                x[r] = acc;
            }
            p.copy_from_slice(&x);
        }
    }

    /// Reweights by the measurement likelihood, summarizes, then resamples.
    pub fn update<R: Rng + ?Sized>(&mut self, system: &LinearSystem, y: &Vector, rng: &mut R) -> ParticleSummary {
        let degenerate = self.reweight(system, y);
        let summary = self.summary(degenerate);
        self.resample(rng);
        summary
    }

    /// Multiplies weights by `p_v(y − Cx)` and normalizes; returns true on total underflow.
    fn reweight(&mut self, system: &LinearSystem, y: &Vector) -> bool {
        let n = self.n;
        let d = system.meas_dim();
        let c = &system.c;
        let noise = &system.measurement_noise;
        let mut v = vec![0.0; d];
        let mut max_lw = f64::NEG_INFINITY;
        for (p, w) in self.states.chunks_exact(n).zip(self.weights.iter_mut()) {
            for (i, vi) in v.iter_mut().enumerate() {
                let mut cx = 0.0;
                for j in 0..n {
                    cx += c[(i, j)] * p[j];
                }
                *vi = y[i] - cx;
            }
            *w = w.ln() + noise.log_pdf(&v);
            max_lw = max_lw.max(*w);
        }
        let degenerate = !max_lw.is_finite();
        if degenerate {
            let u = 1.0 / self.len() as f64;
            self.weights.iter_mut().for_each(|w| *w = u);
        } else {
            let mut total = 0.0;
            for w in &mut self.weights {
                *w = (*w - max_lw).exp();
                total += *w;
            }
            self.weights.iter_mut().for_each(|w| *w /= total);
        }
        degenerate
    }

    fn summary(&self, degenerate: bool) -> ParticleSummary {
        let n = self.n;
        let mut mean = Vector::zeros(n);
        for (p, w) in self.states.chunks_exact(n).zip(&self.weights) {
            for j in 0..n {
                mean[j] += w * p[j];
            }
        }
        let mut cov = Matrix::zeros(n, n);
        for (p, w) in self.states.chunks_exact(n).zip(&self.weights) {
            for r in 0..n {
                for c in 0..n {
                    cov[(r, c)] += w * (p[r] - mean[r]) * (p[c] - mean[c]);
                }
            }
        }
        ParticleSummary { mean, cov, degenerate }
    }

    /// Systematic resampling: one uniform offset, `N` evenly spaced pointers.
    pub fn resample<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let count = self.len();
        let n = self.n;
        let step = 1.0 / count as f64;
        let mut u = rng.random::<f64>() * step;
        let mut out = Vec::with_capacity(self.states.len());
        let mut cum = self.weights[0];
        let mut i = 0;
        for _ in 0..count {
            while u > cum && i + 1 < count {
                i += 1;
                cum += self.weights[i];
            }
            out.extend_from_slice(&self.states[i * n..(i + 1) * n]);
            u += step;
        }
        self.states = out;
        self.weights.iter_mut().for_each(|w| *w = step);
    }
}

/// Propagate, reweight, summarize, resample.
pub fn pf_step<R: Rng + ?Sized>(
    cloud: &mut ParticleCloud,
    system: &LinearSystem,
    w_factor: &Matrix,
    y: &Vector,
    rng: &mut R,
) -> ParticleSummary {
    cloud.propagate(system, w_factor, rng);
    cloud.update(system, y, rng)
}

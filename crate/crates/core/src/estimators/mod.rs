//! Recursive estimators for `x_t = A x_{t-1} + w_t`, `y_t = C x_t + v_t`
//! with Gaussian `w_t` and arbitrary `v_t`.
//!
//! Every Gaussian-belief filter here shares the Kalman time update and
//! differs only in how it folds in the measurement.

pub mod consistency;
pub mod dpkf;
pub mod kalman;
pub mod masreliez;
pub mod mckf;
pub mod particle;
mod registry;

pub use consistency::{verify_corollary1, CorollaryInstance};
pub use dpkf::{dpkf_step, dpkf_update, mr_matrix, newton_posterior_step, AnchoredQuadratic, MrSafeguardConfig};
pub use kalman::{kf_measurement_update, kf_step, kf_time_update};
pub use masreliez::{masreliez_step, masreliez_update, MasreliezOutcome, QuadratureConfig};
pub use mckf::{mckf_step, mckf_update, MckfConfig, MckfOutcome};
pub use particle::{pf_step, ParticleCloud, ParticleSummary};
pub use registry::{EstimatorKind, EstimatorParams, Filter, FilterFlags, StepReport, ESTIMATOR_NAMES};

use rand_chacha::ChaCha8Rng;

use crate::error::MathError;
use crate::linalg::{Matrix, SymPdMatrix, Vector};
use crate::noise::{GaussianSpec, NoiseModel};

/// Generator used for all simulation and particle-filter randomness.
pub type SimRng = ChaCha8Rng;

/// Mean and covariance of the running estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianBelief {
    pub mean: Vector,
    pub cov: SymPdMatrix,
}

impl GaussianBelief {
    pub fn new(mean: Vector, cov: SymPdMatrix) -> Result<Self, MathError> {
        if mean.len() != cov.dim() {
            return Err(MathError::DimensionMismatch {
                expected: cov.dim().to_string(),
                got: mean.len().to_string(),
            });
        }
        if !mean.iter().all(|v| v.is_finite()) {
            return Err(MathError::NonFinite("mean"));
        }
        Ok(Self { mean, cov })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// `(A, C, w ~ N(μ_w, Σ_w), v ~ measurement_noise)`.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub a: Matrix,
    pub c: Matrix,
    pub process_noise: GaussianSpec,
    pub measurement_noise: NoiseModel,
}

impl LinearSystem {
    pub fn new(
        a: Matrix,
        c: Matrix,
        process_noise: GaussianSpec,
        measurement_noise: NoiseModel,
    ) -> Result<Self, MathError> {
        let n = a.nrows();
        let mismatch = |expected: String, got: String| MathError::DimensionMismatch { expected, got };
        if !a.is_square() {
            return Err(mismatch("square A".into(), format!("{}x{}", a.nrows(), a.ncols())));
        }
        if c.ncols() != n || c.nrows() != measurement_noise.dim() {
            return Err(mismatch(
                format!("C of shape {}x{n}", measurement_noise.dim()),
                format!("{}x{}", c.nrows(), c.ncols()),
            ));
        }
        if process_noise.dim() != n {
            return Err(mismatch(
                format!("process noise of dim {n}"),
                process_noise.dim().to_string(),
            ));
        }
        Ok(Self {
            a,
            c,
            process_noise,
            measurement_noise,
        })
    }

    /// The 2-D rotation benchmark: `A = R(π/18)`, `C = [1 1]`, `w ~ N(0, 0.05 I₂)`.
    pub fn rotation_benchmark(measurement_noise: NoiseModel) -> Result<Self, MathError> {
        let theta = std::f64::consts::PI / 18.0;
        let (s, c) = theta.sin_cos();
        let a = Matrix::from_row_slice(2, 2, &[c, -s, s, c]);
        let cm = Matrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let w = GaussianSpec {
            mean: Vector::zeros(2),
            covariance: SymPdMatrix::scaled_identity(2, 0.05)?,
        };
        Self::new(a, cm, w, measurement_noise)
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn meas_dim(&self) -> usize {
        self.c.nrows()
    }
}

/// Information-form measurement update shared by the Gaussian-belief filters:
///
/// ```text
/// P⁺⁻¹ = P⁻¹ + Cᵀ W C,     μ⁺ = μ + P⁺ Cᵀ s
/// ```
///
/// where `W` is the measurement information (symmetric PSD) and `s` the
/// measurement score. When `W` is invertible the algebraically equal gain form
/// is used: it keeps `P⁻ − P⁺` PSD to rounding even when `W` is huge, which the
/// inverse-of-inverse route does not.
pub(crate) fn information_update(
    prior: &GaussianBelief,
    c: &Matrix,
    info: &Matrix,
    score: &Vector,
) -> Result<GaussianBelief, MathError> {
    let p = prior.cov.matrix();
    let gain_form = SymPdMatrix::from_symmetrized(info).ok().and_then(|w| {
        // K = P Cᵀ (C P Cᵀ + W⁻¹)⁻¹,  P⁺ = P − K C P,  μ⁺ = μ + K W⁻¹ s
        let w_inv = w.inverse();
        if !w_inv.iter().all(|v| v.is_finite()) {
            return None;
        }
        let pct = p * c.transpose();
        let s = SymPdMatrix::from_symmetrized(&(c * &pct + w_inv)).ok()?;
        let gain_t = s.solve_matrix(&pct.transpose()).ok()?;
        let post = SymPdMatrix::from_symmetrized(&(p - &pct * &gain_t)).ok()?;
        let mean = &prior.mean + gain_t.transpose() * w.solve(score).ok()?;
        Some((mean, post))
    });
    let (mean, post) = match gain_form {
        Some(found) => found,
        None => {
            let post_info = prior.cov.inverse() + c.transpose() * info * c;
            let post_info = SymPdMatrix::from_symmetrized(&post_info)?;
            let post = SymPdMatrix::from_symmetrized(&post_info.inverse())?;
            (&prior.mean + post.matrix() * (c.transpose() * score), post)
        }
    };
    GaussianBelief::new(mean, post)
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;
    use crate::noise::preset;

    pub fn rotation(noise: &str) -> LinearSystem {
        LinearSystem::rotation_benchmark(preset(noise).unwrap()).unwrap()
    }

    pub fn scalar_system(a: f64, c: f64, q: f64, noise: NoiseModel) -> LinearSystem {
        LinearSystem::new(
            Matrix::from_element(1, 1, a),
            Matrix::from_element(1, 1, c),
            GaussianSpec {
                mean: Vector::zeros(1),
                covariance: SymPdMatrix::from_diagonal(&[q]).unwrap(),
            },
            noise,
        )
        .unwrap()
    }

    pub fn belief(mean: &[f64], cov: &[f64]) -> GaussianBelief {
        let n = mean.len();
        GaussianBelief::new(
            Vector::from_column_slice(mean),
            SymPdMatrix::new(Matrix::from_row_slice(n, n, cov)).unwrap(),
        )
        .unwrap()
    }
}

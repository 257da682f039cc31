//! Masreliez score-function filter for scalar measurements.
//!
//! The predicted measurement density `p(y | y_{0:t-1})` is the convolution of
//! the Gaussian pushforward `N(Cμ⁻, CP⁻Cᵀ)` with the noise density. It is
//! tabulated on a grid around the predicted measurement, and the update uses
//! the score `g = −d/dy ln p` and its slope `G = dg/dy`:
//!
//! ```text
//! μ⁺ = μ⁻ + P⁻Cᵀ g(y),     P⁺ = P⁻ − P⁻Cᵀ G(y) C P⁻
//! ```

use serde::{Deserialize, Serialize};

use super::kalman::kf_time_update;
use super::{GaussianBelief, LinearSystem};
use crate::error::FilterError;
use crate::linalg::{SymPdMatrix, Vector};
use crate::noise::NoiseModel;

/// Grid resolution of the convolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub points: usize,
    /// Half-width of the grid in standard deviations.
    pub sigmas: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            points: 50,
            sigmas: 5.0,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.points < 5 {
            return Err(format!("grid needs at least 5 points, got {}", self.points));
        }
        if !(self.sigmas > 0.0 && self.sigmas.is_finite()) {
            return Err(format!("grid span must be positive, got {}", self.sigmas));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MasreliezOutcome {
    pub belief: GaussianBelief,
    /// The measurement fell outside the grid and was clamped to its edge.
    pub clamped: bool,
}

/// Tabulated `ln p(y)` on a uniform grid.
struct ScoreTable {
    y0: f64,
    h: f64,
    score: Vec<f64>,
    slope: Vec<f64>,
}

impl ScoreTable {
    fn build(noise: &NoiseModel, pred_mean: f64, pred_var: f64, quad: &QuadratureConfig) -> Self {
        let n = quad.points;
        let s = pred_var.sqrt();

        // Gaussian quadrature nodes for the state pushforward.
        let hz = 2.0 * quad.sigmas * s / (n - 1) as f64;
        let z: Vec<f64> = (0..n).map(|k| pred_mean - quad.sigmas * s + k as f64 * hz).collect();
        let lw: Vec<f64> = z.iter().map(|zk| -0.5 * ((zk - pred_mean) / s).powi(2)).collect();
        let lw_norm = log_sum_exp(lw.iter().copied());

        let center = pred_mean + noise.center(0);
        let spread = noise.spread(0);
        let half = quad.sigmas * (pred_var + spread * spread).sqrt();
        let h = 2.0 * half / (n - 1) as f64;
        let y0 = center - half;
        let log_p: Vec<f64> = (0..n)
            .map(|j| {
                let y = y0 + j as f64 * h;
                log_sum_exp(z.iter().zip(&lw).map(|(zk, w)| w + noise.log_pdf_coord(0, y - zk))) - lw_norm
            })
            .collect();

        let score = central_diff(&log_p, h).into_iter().map(|d| -d).collect::<Vec<_>>();
        let slope = central_diff(&score, h);
        Self { y0, h, score, slope }
    }

    /// Linear interpolation of `(g, G)` at `y`; the flag reports clamping.
    fn at(&self, y: f64) -> (f64, f64, bool) {
        let n = self.score.len();
        let u = (y - self.y0) / self.h;
        let clamped = !(0.0..=(n - 1) as f64).contains(&u);
        let u = u.clamp(0.0, (n - 1) as f64);
        let j = (u.floor() as usize).min(n - 2);
        let t = u - j as f64;
        let lerp = |v: &[f64]| v[j] + t * (v[j + 1] - v[j]);
        (lerp(&self.score), lerp(&self.slope), clamped)
    }
}

fn log_sum_exp(it: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = it.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + it.map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Central differences inside, one-sided at both ends.
fn central_diff(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    (0..n)
        .map(|j| match j {
            0 => (f[1] - f[0]) / h,
            _ if j == n - 1 => (f[n - 1] - f[n - 2]) / h,
            _ => (f[j + 1] - f[j - 1]) / (2.0 * h),
        })
        .collect()
}

/// Measurement half of the filter, applied to a predicted belief.
pub fn masreliez_update(
    pred: &GaussianBelief,
    system: &LinearSystem,
    y: &Vector,
    quad: &QuadratureConfig,
) -> Result<MasreliezOutcome, FilterError> {
    if system.meas_dim() != 1 {
        return Err(FilterError::NotApplicable {
            estimator: "masreliez",
            reason: "only scalar measurements are supported",
        });
    }
    let p = pred.cov.matrix();
    let pct = p * system.c.transpose();
    let pred_var = (&system.c * &pct)[(0, 0)];
    let pred_mean = (&system.c * &pred.mean)[0];
    let table = ScoreTable::build(&system.measurement_noise, pred_mean, pred_var, quad);
    let (g, big_g, clamped) = table.at(y[0]);
    if !(g.is_finite() && big_g.is_finite()) {
        return Err(FilterError::diverged(0, "non-finite score"));
    }
    let mean = &pred.mean + &pct * g;
    let cov = p - &pct * pct.transpose() * big_g;
    let cov = SymPdMatrix::from_symmetrized(&cov)
        .map_err(|_| FilterError::diverged(0, "posterior covariance is not positive definite"))?;
    Ok(MasreliezOutcome {
        belief: GaussianBelief::new(mean, cov)?,
        clamped,
    })
}

/// Time update followed by [`masreliez_update`].
pub fn masreliez_step(
    belief: &GaussianBelief,
    system: &LinearSystem,
    y: &Vector,
    quad: &QuadratureConfig,
) -> Result<MasreliezOutcome, FilterError> {
    masreliez_update(&kf_time_update(belief, system)?, system, y, quad)
}

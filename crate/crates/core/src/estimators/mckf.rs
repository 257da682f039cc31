//! Maximum-correntropy Kalman filter.
//!
//! A fixed-point iteration reweights the moment-matched measurement
//! covariance by a Gaussian kernel of the whitened residual, so that large
//! residuals inflate `R` and shrink the gain.

use serde::{Deserialize, Serialize};

use super::kalman::{kf_time_update, moment_matched};
use super::{information_update, GaussianBelief, LinearSystem};
use crate::error::FilterError;
use crate::linalg::{Matrix, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MckfConfig {
    pub kernel_sigma: f64,
    pub fp_tol: f64,
    pub fp_max_iter: usize,
}

impl Default for MckfConfig {
    fn default() -> Self {
        Self {
            kernel_sigma: 5.0,
            fp_tol: 1e-6,
            fp_max_iter: 100,
        }
    }
}

impl MckfConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.kernel_sigma > 0.0) {
            return Err(format!("kernel sigma must be positive, got {}", self.kernel_sigma));
        }
        if !(self.fp_tol > 0.0 && self.fp_tol.is_finite()) {
            return Err(format!("fixed-point tolerance must be positive, got {}", self.fp_tol));
        }
        if self.fp_max_iter == 0 {
            return Err("fixed-point iteration limit must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MckfOutcome {
    pub belief: GaussianBelief,
    pub iterations: usize,
    pub converged: bool,
}

// Keeps R/λ representable for residuals far beyond the kernel width.
const MIN_WEIGHT: f64 = 1e-300;

/// Measurement half of the filter, applied to a predicted belief.
pub fn mckf_update(
    pred: &GaussianBelief,
    system: &LinearSystem,
    y: &Vector,
    cfg: &MckfConfig,
) -> Result<MckfOutcome, FilterError> {
    let meas = moment_matched(system).map_err(|_| FilterError::NotApplicable {
        estimator: "mckf",
        reason: "measurement noise has no finite mean and variance",
    })?;
    let l = meas.covariance.cholesky_factor();
    let l_inv = l
        .clone()
        .try_inverse()
        .ok_or(FilterError::diverged(0, "singular measurement covariance"))?;
    let c = &system.c;
    let two_k2 = 2.0 * cfg.kernel_sigma * cfg.kernel_sigma;

    let mut x = pred.mean.clone();
    let mut post = pred.clone();
    for it in 1..=cfg.fp_max_iter {
        let e = &l_inv * (y - c * &x - &meas.mean);
        let lambda = e.map(|ei| (-ei * ei / two_k2).exp().max(MIN_WEIGHT));
        // R̃⁻¹ = L⁻ᵀ Λ L⁻¹
        let info = l_inv.transpose() * Matrix::from_diagonal(&lambda) * &l_inv;
        let score = &info * (y - c * &pred.mean - &meas.mean);
        post = information_update(pred, c, &info, &score).map_err(|e| FilterError::diverged(0, e.to_string()))?;
        let step = (&post.mean - &x).norm();
        let done = step <= cfg.fp_tol * (1.0 + post.mean.norm());
        x = post.mean.clone();
        if done {
            return Ok(MckfOutcome {
                belief: post,
                iterations: it,
                converged: true,
            });
        }
    }
    Ok(MckfOutcome {
        belief: post,
        iterations: cfg.fp_max_iter,
        converged: false,
    })
}

/// Time update followed by [`mckf_update`].
pub fn mckf_step(
    belief: &GaussianBelief,
    system: &LinearSystem,
    y: &Vector,
    cfg: &MckfConfig,
) -> Result<MckfOutcome, FilterError> {
    mckf_update(&kf_time_update(belief, system)?, system, y, cfg)
}

//! Mode-anchored MAP filter.
//!
//! The measurement log-likelihood `r(y − Cx)` is replaced by a quadratic in
//! the innovation whose vertex sits at the noise mode `m_v` and whose
//! gradient matches `∇r` at the current innovation `v̄ = y − Cμ⁻`. With a
//! diagonal Hessian this gives, per coordinate,
//!
//! ```text
//! [M_r]ᵢᵢ = [∇r(v̄)]ᵢ / (v̄ᵢ − [m_v]ᵢ)
//! ```
//!
//! and the update `P⁺⁻¹ = P⁻⁻¹ + Cᵀ M_r C`, `μ⁺ = μ⁻ + P⁺ Cᵀ ∇r(v̄)`.
//! Folding that quadratic into the Gaussian prior and minimizing is exactly
//! one Newton-like step on the negative log-posterior, which
//! [`newton_posterior_step`] computes by a separate route.

use serde::{Deserialize, Serialize};

use super::kalman::kf_time_update;
use super::{information_update, GaussianBelief, LinearSystem};
use crate::error::FilterError;
use crate::linalg::{Matrix, SymPdMatrix, Vector};
use crate::noise::NoiseModel;
use crate::quadratic::QuadraticForm;

/// Safeguards that keep `M_r` finite and positive definite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MrSafeguardConfig {
    /// Support projection margin, scaled by `1 + |mode|`.
    pub epsilon_margin: f64,
    /// Below this distance from the mode the ratio becomes the curvature at the mode.
    pub denom_floor: f64,
    /// Upper clamp of each diagonal entry; `1 / mr_cap` is the lower clamp.
    pub mr_cap: f64,
}

impl Default for MrSafeguardConfig {
    fn default() -> Self {
        Self {
            epsilon_margin: 1e-6,
            denom_floor: 1e-8,
            mr_cap: 1e8,
        }
    }
}

impl MrSafeguardConfig {
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("epsilon_margin", self.epsilon_margin),
            ("denom_floor", self.denom_floor),
            ("mr_cap", self.mr_cap),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("{name} must be positive and finite, got {v}"));
            }
        }
        Ok(())
    }
}

/// The per-coordinate pieces of the mode-anchored quadratic.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchoredQuadratic {
    /// `v̄` after projection into the support interior.
    pub projected: Vector,
    /// `∇r` at the projected innovation, or `M_r (v̄ − m)` where a clamp binds.
    pub gradient: Vector,
    /// Diagonal of `M_r`.
    pub curvature: Vector,
    /// Mode selected for each coordinate.
    pub anchor: Vector,
}

impl AnchoredQuadratic {
    pub fn build(model: &NoiseModel, innovation: &Vector, cfg: &MrSafeguardConfig) -> Result<Self, FilterError> {
        let d = model.dim();
        if innovation.len() != d {
            return Err(crate::error::NoiseError::Dimension {
                expected: d,
                got: innovation.len(),
            }
            .into());
        }
        let lower = 1.0 / cfg.mr_cap;
        let mut projected = Vector::zeros(d);
        let mut gradient = Vector::zeros(d);
        let mut curvature = Vector::zeros(d);
        let mut anchor = Vector::zeros(d);
        for i in 0..d {
            let modes = model.modes_coord(i);
            let support = model.support(i);
            let scale = modes.iter().fold(0.0f64, |acc, m| acc.max(m.abs()));
            let vp = support.project(innovation[i], cfg.epsilon_margin * (1.0 + scale));
            let g = model.grad_r_coord(i, vp)?;
            let m = select_mode(modes, vp, g);
            let dist = vp - m;
            let ratio = if dist.abs() < cfg.denom_floor {
                curvature_at(model, i, m, cfg.denom_floor)?
            } else {
                g / dist
            };
            let clamped = if ratio.is_nan() || ratio < lower {
                lower
            } else {
                ratio.min(cfg.mr_cap)
            };
            // A binding cap keeps the vertex at the mode instead of the
            // gradient, otherwise the step overshoots by ratio / cap.
            let g = if ratio > cfg.mr_cap && dist.abs() >= cfg.denom_floor {
                clamped * dist
            } else {
                g
            };
            let ratio = clamped;
            projected[i] = vp;
            gradient[i] = g;
            curvature[i] = ratio;
            anchor[i] = m;
        }
        Ok(Self {
            projected,
            gradient,
            curvature,
            anchor,
        })
    }

    pub fn hessian(&self) -> Matrix {
        Matrix::from_diagonal(&self.curvature)
    }
}

/// With several modes, prefer one that makes `∇r / (v̄ − m)` positive, nearest first.
fn select_mode(modes: &[f64], v: f64, g: f64) -> f64 {
    if modes.len() == 1 {
        return modes[0];
    }
    let nearest =
        |it: &mut dyn Iterator<Item = f64>| it.min_by(|a, b| (v - a).abs().partial_cmp(&(v - b).abs()).unwrap());
    nearest(&mut modes.iter().copied().filter(|m| g / (v - m) > 0.0))
        .or_else(|| nearest(&mut modes.iter().copied()))
        .expect("noise models carry at least one mode")
}

/// Central difference of `∂r/∂vᵢ` at the mode, one-sided next to a support boundary.
fn curvature_at(model: &NoiseModel, i: usize, m: f64, h: f64) -> Result<f64, FilterError> {
    let support = model.support(i);
    let inside = |x: f64| support.contains_interior(x);
    let g = |x: f64| model.grad_r_coord(i, x);
    Ok(if inside(m - h) && inside(m + h) {
        (g(m + h)? - g(m - h)?) / (2.0 * h)
    } else if inside(m + h) && inside(m) {
        (g(m + h)? - g(m)?) / h
    } else if inside(m + h) {
        (g(m + 2.0 * h)? - g(m + h)?) / h
    } else {
        (g(m)? - g(m - h)?) / h
    })
}

/// Diagonal `M_r` for innovation `v̄`.
pub fn mr_matrix(model: &NoiseModel, innovation: &Vector, cfg: &MrSafeguardConfig) -> Result<SymPdMatrix, FilterError> {
    let q = AnchoredQuadratic::build(model, innovation, cfg)?;
    Ok(SymPdMatrix::from_diagonal(q.curvature.as_slice())?)
}

/// Measurement half of the filter, applied to a predicted belief.
pub fn dpkf_update(
    pred: &GaussianBelief,
    system: &LinearSystem,
    y: &Vector,
    cfg: &MrSafeguardConfig,
) -> Result<GaussianBelief, FilterError> {
    let innovation = y - &system.c * &pred.mean;
    let q = AnchoredQuadratic::build(&system.measurement_noise, &innovation, cfg)?;
    let post = information_update(pred, &system.c, &q.hessian(), &q.gradient)
        .map_err(|e| FilterError::diverged(0, e.to_string()))?;
    if !post.mean.iter().all(|v| v.is_finite()) {
        return Err(FilterError::diverged(0, "non-finite mean"));
    }
    Ok(post)
}

/// Time update followed by [`dpkf_update`].
pub fn dpkf_step(
    belief: &GaussianBelief,
    system: &LinearSystem,
    y: &Vector,
    cfg: &MrSafeguardConfig,
) -> Result<GaussianBelief, FilterError> {
    dpkf_update(&kf_time_update(belief, system)?, system, y, cfg)
}

/// Minimizes `½(ξ − μ⁻)ᵀP⁻⁻¹(ξ − μ⁻) + r̂(y − Cξ)` in closed form, where `r̂`
/// is the mode-anchored quadratic built at `ξ = μ⁻`. Returns the minimizer and
/// the inverse Hessian.
pub fn newton_posterior_step(
    belief: &GaussianBelief,
    system: &LinearSystem,
    y: &Vector,
    cfg: &MrSafeguardConfig,
) -> Result<GaussianBelief, FilterError> {
    let pred = kf_time_update(belief, system)?;
    let innovation = y - &system.c * &pred.mean;
    let q = AnchoredQuadratic::build(&system.measurement_noise, &innovation, cfg)?;

    // r̂(v) = ½ (v − c)ᵀ M (v − c), vertex c chosen so ∇r̂(v̄) = ∇r(projected v̄).
    // Without active safeguards c is the selected mode.
    let hessian = q.hessian();
    let vertex = Vector::from_iterator(
        innovation.len(),
        innovation
            .iter()
            .zip(q.gradient.iter().zip(q.curvature.iter()))
            .map(|(v, (g, k))| v - g / k),
    );
    let mc = &hessian * &vertex;
    let meas = QuadraticForm::new(hessian, -mc.clone(), vertex.dot(&mc))?;
    let meas_in_state = meas.compose_affine(&(-&system.c), y)?;
    let prior = QuadraticForm::from_gaussian(&pred.mean, &pred.cov)?;
    let objective = prior.add(&meas_in_state)?;
    let (mean, cov) = objective
        .minimizer()
        .map_err(|e| FilterError::diverged(0, e.to_string()))?;
    Ok(GaussianBelief::new(mean, cov)?)
}

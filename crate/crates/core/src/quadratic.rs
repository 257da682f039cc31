//! Quadratic forms in homogeneous layout.
//!
//! A form `(M, m, γ)` evaluates to
//!
//! ```text
//! g(x) = ½ [x; 1]ᵀ [[M, m], [mᵀ, γ]] [x; 1] = ½ xᵀMx + mᵀx + ½γ.
//! ```
//!
//! Value functions and Gaussian log-densities are both of this shape. The
//! estimators only ever read `M` and `m`; `γ` is carried so that conjugation
//! identities can be checked exactly.

use crate::error::MathError;
use crate::linalg::{check_finite, check_len, check_square, Matrix, SymPdMatrix, Vector};

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    hessian: Matrix,
    linear: Vector,
    gamma: f64,
}

impl QuadraticForm {
    pub fn new(hessian: Matrix, linear: Vector, gamma: f64) -> Result<Self, MathError> {
        check_square(&hessian)?;
        check_len(linear.len(), hessian.nrows())?;
        check_finite(&hessian, "quadratic term")?;
        if !linear.iter().all(|v| v.is_finite()) {
            return Err(MathError::NonFinite("linear term"));
        }
        if !gamma.is_finite() {
            return Err(MathError::NonFinite("constant term"));
        }
        let hessian = (&hessian + hessian.transpose()) * 0.5;
        Ok(Self { hessian, linear, gamma })
    }

    pub fn scalar(hessian: f64, linear: f64, gamma: f64) -> Result<Self, MathError> {
        Self::new(
            Matrix::from_element(1, 1, hessian),
            Vector::from_element(1, linear),
            gamma,
        )
    }

    /// Negative log-density of `N(mean, cov)` without the normalizer:
    /// `½ (x − μ)ᵀ Σ⁻¹ (x − μ)`.
    pub fn from_gaussian(mean: &Vector, cov: &SymPdMatrix) -> Result<Self, MathError> {
        let info = cov.inverse();
        let info_mean = cov.solve(mean)?;
        let gamma = mean.dot(&info_mean);
        Self::new(info, -info_mean, gamma)
    }

    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    pub fn hessian(&self) -> &Matrix {
        &self.hessian
    }

    pub fn linear(&self) -> &Vector {
        &self.linear
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn eval(&self, x: &Vector) -> Result<f64, MathError> {
        check_len(x.len(), self.dim())?;
        Ok(0.5 * x.dot(&(&self.hessian * x)) + self.linear.dot(x) + 0.5 * self.gamma)
    }

    /// Fenchel conjugate `g*(λ) = sup_x (λᵀx − g(x))`, which for `M ≻ 0` is
    /// again quadratic: `(M⁻¹, −M⁻¹m, mᵀM⁻¹m − γ)`.
    pub fn conjugate(&self) -> Result<Self, MathError> {
        let pd = SymPdMatrix::new(self.hessian.clone()).map_err(|e| match e {
            MathError::NotPositiveDefinite => MathError::ConjugateNotFinite,
            other => other,
        })?;
        let solved = pd.solve(&self.linear)?;
        let gamma = self.linear.dot(&solved) - self.gamma;
        Self::new(pd.inverse(), -solved, gamma)
    }

    pub fn add(&self, other: &Self) -> Result<Self, MathError> {
        check_len(other.dim(), self.dim())?;
        Self::new(
            &self.hessian + &other.hessian,
            &self.linear + &other.linear,
            self.gamma + other.gamma,
        )
    }

    /// The form `x ↦ g(Bx + c)`.
    pub fn compose_affine(&self, b: &Matrix, c: &Vector) -> Result<Self, MathError> {
        check_len(b.nrows(), self.dim())?;
        check_len(c.len(), self.dim())?;
        let mc = &self.hessian * c;
        let hessian = b.transpose() * &self.hessian * b;
        let linear = b.transpose() * (&mc + &self.linear);
        let gamma = c.dot(&mc) + 2.0 * self.linear.dot(c) + self.gamma;
        Self::new(hessian, linear, gamma)
    }

    /// Minimizer `−M⁻¹m` and the inverse Hessian `M⁻¹`, for `M ≻ 0`.
    pub fn minimizer(&self) -> Result<(Vector, SymPdMatrix), MathError> {
        let pd = SymPdMatrix::new(self.hessian.clone())?;
        let x = -pd.solve(&self.linear)?;
        let cov = SymPdMatrix::from_symmetrized(&pd.inverse())?;
        Ok((x, cov))
    }
}

/// Convenience wrapper matching the free-function style of the rest of the crate.
pub fn fenchel_conjugate_quadratic(q: &QuadraticForm) -> Result<QuadraticForm, MathError> {
    q.conjugate()
}

pub fn quad_eval(q: &QuadraticForm, x: &Vector) -> Result<f64, MathError> {
    q.eval(x)
}

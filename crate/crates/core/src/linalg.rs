//! Small dense linear algebra on top of `nalgebra`.
//!
//! State dimensions here are tiny (the benchmark has n = 2, d = 1), so
//! everything is heap-backed `DMatrix`/`DVector`. Positive definiteness is
//! certified by a Cholesky factorization rather than an eigendecomposition.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::MathError;

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

const SYMMETRY_TOL: f64 = 1e-12;

/// A symmetric positive-definite matrix together with its Cholesky factor.
#[derive(Debug, Clone)]
pub struct SymPdMatrix {
    matrix: Matrix,
    chol: Cholesky<f64, Dyn>,
}

impl SymPdMatrix {
    /// Validates that `matrix` is symmetric (to 1e-12 relative) and positive definite.
    pub fn new(matrix: Matrix) -> Result<Self, MathError> {
        check_square(&matrix)?;
        check_finite(&matrix, "matrix")?;
        let scale = matrix.amax().max(f64::MIN_POSITIVE);
        let asym = (&matrix - matrix.transpose()).amax();
        if asym > SYMMETRY_TOL * scale {
            return Err(MathError::NotPositiveDefinite);
        }
        Self::factor(matrix)
    }

    /// Symmetrizes `(S + Sᵀ)/2` and then demands positive definiteness.
    pub fn from_symmetrized(matrix: &Matrix) -> Result<Self, MathError> {
        Self::factor(symmetrize(matrix)?)
    }

    pub fn identity(n: usize) -> Self {
        Self::factor(Matrix::identity(n, n)).expect("identity is PD")
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self, MathError> {
        Self::factor(Matrix::from_diagonal(&Vector::from_column_slice(diag)))
    }

    pub fn scaled_identity(n: usize, s: f64) -> Result<Self, MathError> {
        Self::factor(Matrix::identity(n, n) * s)
    }

    fn factor(matrix: Matrix) -> Result<Self, MathError> {
        check_finite(&matrix, "matrix")?;
        let chol = Cholesky::new(matrix.clone()).ok_or(MathError::NotPositiveDefinite)?;
        if chol.l_dirty().diagonal().iter().any(|d| !(*d > 0.0)) {
            return Err(MathError::NotPositiveDefinite);
        }
        Ok(Self { matrix, chol })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> Matrix {
        self.matrix
    }

    /// Lower Cholesky factor `L` with `S = L Lᵀ`.
    pub fn cholesky_factor(&self) -> Matrix {
        self.chol.l()
    }

    pub fn solve(&self, b: &Vector) -> Result<Vector, MathError> {
        check_len(b.len(), self.dim())?;
        Ok(self.chol.solve(b))
    }

    pub fn solve_matrix(&self, b: &Matrix) -> Result<Matrix, MathError> {
        check_len(b.nrows(), self.dim())?;
        Ok(self.chol.solve(b))
    }

    /// Explicit inverse, symmetrized. Only for covariance reporting and
    /// information-form assembly.
    pub fn inverse(&self) -> Matrix {
        let inv = self.chol.inverse();
        (&inv + inv.transpose()) * 0.5
    }

    pub fn log_det(&self) -> f64 {
        2.0 * self.chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>()
    }

    /// Cheap 2-norm condition estimate from the Cholesky diagonal.
    pub fn condition_estimate(&self) -> f64 {
        let diag = self.chol.l_dirty().diagonal();
        let max = diag.iter().cloned().fold(f64::MIN, f64::max);
        let min = diag.iter().cloned().fold(f64::MAX, f64::min);
        (max / min).powi(2)
    }
}

impl PartialEq for SymPdMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.matrix == other.matrix
    }
}

/// Solves `S x = b` through a Cholesky factorization of `S`.
pub fn pd_solve(s: &SymPdMatrix, b: &Vector) -> Result<Vector, MathError> {
    s.solve(b)
}

/// Matrix right-hand-side variant of [`pd_solve`].
pub fn pd_solve_matrix(s: &SymPdMatrix, b: &Matrix) -> Result<Matrix, MathError> {
    s.solve_matrix(b)
}

/// Returns `(S + Sᵀ)/2`.
pub fn symmetrize(s: &Matrix) -> Result<Matrix, MathError> {
    check_square(s)?;
    Ok((s + s.transpose()) * 0.5)
}

/// True when `s` survives a Cholesky factorization.
pub fn is_positive_definite(s: &Matrix) -> bool {
    s.is_square() && s.iter().all(|v| v.is_finite()) && SymPdMatrix::factor(s.clone()).is_ok()
}

pub(crate) fn check_square(m: &Matrix) -> Result<(), MathError> {
    if m.is_square() {
        Ok(())
    } else {
        Err(MathError::DimensionMismatch {
            expected: "square matrix".into(),
            got: format!("{}x{}", m.nrows(), m.ncols()),
        })
    }
}

pub(crate) fn check_len(got: usize, expected: usize) -> Result<(), MathError> {
    if got == expected {
        Ok(())
    } else {
        Err(MathError::DimensionMismatch {
            expected: expected.to_string(),
            got: got.to_string(),
        })
    }
}

pub(crate) fn check_finite(m: &Matrix, what: &'static str) -> Result<(), MathError> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(MathError::NonFinite(what))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn solve_identity() {
        let s = SymPdMatrix::identity(2);
        let x = pd_solve(&s, &Vector::from_vec(vec![1.0, 2.0])).unwrap();
        assert_eq!(x, Vector::from_vec(vec![1.0, 2.0]));
    }

    #[test]
    fn solve_diagonal() {
        let s = SymPdMatrix::from_diagonal(&[2.0, 4.0]).unwrap();
        let x = pd_solve(&s, &Vector::from_vec(vec![2.0, 4.0])).unwrap();
        assert_relative_eq!(x, Vector::from_vec(vec![1.0, 1.0]), epsilon = 1e-15);
    }

    #[test]
    fn solve_coupled() {
        let m = Matrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let s = SymPdMatrix::new(m.clone()).unwrap();
        let b = Vector::from_vec(vec![3.0, 3.0]);
        let x = pd_solve(&s, &b).unwrap();
        assert_relative_eq!(x, Vector::from_vec(vec![1.0, 1.0]), epsilon = 1e-14);
        assert!((&m * &x - &b).norm() < 1e-12);
    }

    #[test]
    fn solve_rejects_wrong_length() {
        let s = SymPdMatrix::identity(2);
        assert!(matches!(
            pd_solve(&s, &Vector::from_vec(vec![1.0])),
            Err(MathError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn symmetrize_cleans_roundoff() {
        let m = Matrix::from_row_slice(2, 2, &[1.0, 1e-15, 0.0, 1.0]);
        let s = symmetrize(&m).unwrap();
        assert!((s - Matrix::identity(2, 2)).amax() <= 1e-15);
    }

    #[test]
    fn symmetrize_keeps_symmetric() {
        let m = Matrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 3.0]);
        assert_eq!(symmetrize(&m).unwrap(), m);
    }

    #[test]
    fn indefinite_rejected_when_pd_demanded() {
        let m = Matrix::from_row_slice(2, 2, &[0.0, -1.0, -1.0, 0.0]);
        assert_eq!(
            SymPdMatrix::from_symmetrized(&m).unwrap_err(),
            MathError::NotPositiveDefinite
        );
        assert!(!is_positive_definite(&m));
    }

    #[test]
    fn non_square_rejected() {
        let m = Matrix::zeros(2, 3);
        assert!(symmetrize(&m).is_err());
    }

    #[test]
    fn asymmetric_input_rejected_by_new() {
        let m = Matrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(SymPdMatrix::new(m).is_err());
    }
}

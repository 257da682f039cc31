//! Numerical check that the conjugate-domain prediction equals the Kalman
//! time update.
//!
//! The prior value function is the infimal convolution of the previous
//! posterior quadratic pushed through `A` with the process-noise quadratic.
//! Its conjugate is a sum of conjugates, so conjugating twice must land on
//! the quadratic built directly from `(μ⁻, P⁻)`.

use rand::Rng;

use crate::error::MathError;
use crate::linalg::{Matrix, SymPdMatrix, Vector};
use crate::quadratic::QuadraticForm;

/// Previous posterior `(μ, P)`, dynamics `A` and process noise `(μ_w, Σ_w)`.
#[derive(Debug, Clone)]
pub struct CorollaryInstance {
    pub a: Matrix,
    pub mean: Vector,
    pub cov: SymPdMatrix,
    pub noise_mean: Vector,
    pub noise_cov: SymPdMatrix,
}

impl CorollaryInstance {
    /// Random well-conditioned instance of dimension `n`.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut uniform = |lo: f64, hi: f64, r: usize, c: usize| Matrix::from_fn(r, c, |_, _| rng.random_range(lo..hi));
        let a = uniform(-1.5, 1.5, n, n);
        let b = uniform(-1.0, 1.0, n, n);
        let cov = SymPdMatrix::from_symmetrized(&(&b * b.transpose() + Matrix::identity(n, n) * 0.2)).unwrap();
        let b = uniform(-1.0, 1.0, n, n);
        let noise_cov = SymPdMatrix::from_symmetrized(&(&b * b.transpose() + Matrix::identity(n, n) * 0.2)).unwrap();
        let mean = uniform(-2.0, 2.0, n, 1).column(0).into_owned();
        let noise_mean = uniform(-1.0, 1.0, n, 1).column(0).into_owned();
        Self {
            a,
            mean,
            cov,
            noise_mean,
            noise_cov,
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Prior quadratic through the conjugate domain.
    pub fn prior_via_conjugates(&self) -> Result<QuadraticForm, MathError> {
        let q = QuadraticForm::from_gaussian(&self.noise_mean, &self.noise_cov)?;
        // Conjugate of ξ ↦ ½(ξ−μ)ᵀP⁻¹(ξ−μ) composed with A: s ↦ ½sᵀAPAᵀs + (Aμ)ᵀs.
        let pushed = QuadraticForm::new(
            &self.a * self.cov.matrix() * self.a.transpose(),
            &self.a * &self.mean,
            0.0,
        )?;
        q.conjugate()?.add(&pushed)?.conjugate()
    }

    /// Prior quadratic from the Kalman prediction `(Aμ + μ_w, Σ_w + APAᵀ)`.
    pub fn prior_direct(&self) -> Result<QuadraticForm, MathError> {
        let mean = &self.a * &self.mean + &self.noise_mean;
        let cov = SymPdMatrix::from_symmetrized(
            &(self.noise_cov.matrix() + &self.a * self.cov.matrix() * self.a.transpose()),
        )?;
        QuadraticForm::from_gaussian(&mean, &cov)
    }
}

/// Largest absolute gap between the two prior quadratics over 100 random points.
pub fn verify_corollary1<R: Rng + ?Sized>(instance: &CorollaryInstance, rng: &mut R) -> Result<f64, MathError> {
    let via = instance.prior_via_conjugates()?;
    let direct = instance.prior_direct()?;
    let n = instance.dim();
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let x = Vector::from_fn(n, |_, _| rng.random_range(-3.0..3.0));
        worst = worst.max((via.eval(&x)? - direct.eval(&x)?).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// min over ξ of ½(ξ−μ)ᵀP⁻¹(ξ−μ) + q(x − Aξ), solved as a joint quadratic in ξ.
    fn inf_convolution(inst: &CorollaryInstance, x: &Vector) -> f64 {
        let f = QuadraticForm::from_gaussian(&inst.mean, &inst.cov).unwrap();
        let q = QuadraticForm::from_gaussian(&inst.noise_mean, &inst.noise_cov).unwrap();
        let obj = f.add(&q.compose_affine(&(-&inst.a), x).unwrap()).unwrap();
        let (xi, _) = obj.minimizer().unwrap();
        obj.eval(&xi).unwrap()
    }

    #[test]
    fn thousand_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for k in 0..1000 {
            let inst = CorollaryInstance::random(1 + k % 4, &mut rng);
            let dev = verify_corollary1(&inst, &mut rng).unwrap();
            assert!(dev <= 1e-8, "instance {k}: {dev}");
        }
    }

    #[test]
    fn matches_brute_force_infimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..=4 {
            let inst = CorollaryInstance::random(n, &mut rng);
            let direct = inst.prior_direct().unwrap();
            for _ in 0..20 {
                let x = Vector::from_fn(n, |_, _| rng.random_range(-3.0..3.0));
                let brute = inf_convolution(&inst, &x);
                assert!((brute - direct.eval(&x).unwrap()).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn zero_dynamics_give_noise_prior() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut inst = CorollaryInstance::random(3, &mut rng);
        inst.a = Matrix::zeros(3, 3);
        let via = inst.prior_via_conjugates().unwrap();
        let q = QuadraticForm::from_gaussian(&inst.noise_mean, &inst.noise_cov).unwrap();
        assert!((via.hessian() - q.hessian()).amax() < 1e-10);
        assert!((via.linear() - q.linear()).amax() < 1e-10);
        assert!((via.gamma() - q.gamma()).abs() < 1e-10);
    }

    #[test]
    fn vanishing_noise_keeps_previous_posterior() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut inst = CorollaryInstance::random(2, &mut rng);
        inst.a = Matrix::identity(2, 2);
        inst.noise_mean = Vector::zeros(2);
        inst.noise_cov = SymPdMatrix::scaled_identity(2, 1e-10).unwrap();
        let via = inst.prior_via_conjugates().unwrap();
        let prev = QuadraticForm::from_gaussian(&inst.mean, &inst.cov).unwrap();
        let rel = (via.hessian() - prev.hessian()).amax() / prev.hessian().amax();
        assert!(rel < 1e-8);
    }
}

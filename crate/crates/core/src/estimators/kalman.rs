//! Standard Kalman filter, run against a moment-matched Gaussian measurement model.

use super::{information_update, GaussianBelief, LinearSystem};
use crate::error::FilterError;
use crate::linalg::{SymPdMatrix, Vector};
use crate::noise::GaussianSpec;

/// `P⁻ = Σ_w + A P Aᵀ`, `μ⁻ = A μ + μ_w`.
pub fn kf_time_update(belief: &GaussianBelief, system: &LinearSystem) -> Result<GaussianBelief, FilterError> {
    let a = &system.a;
    let w = &system.process_noise;
    let p = w.covariance.matrix() + a * belief.cov.matrix() * a.transpose();
    let cov = SymPdMatrix::from_symmetrized(&p)?;
    Ok(GaussianBelief::new(a * &belief.mean + &w.mean, cov)?)
}

/// Information-form update against `v ~ N(μ_v, Σ_v)`.
pub fn kf_measurement_update(
    pred: &GaussianBelief,
    system: &LinearSystem,
    y: &Vector,
    meas: &GaussianSpec,
) -> Result<GaussianBelief, FilterError> {
    let innovation = y - &system.c * &pred.mean - &meas.mean;
    let score = meas.covariance.solve(&innovation)?;
    Ok(information_update(pred, &system.c, &meas.covariance.inverse(), &score)?)
}

/// Full KF step using the moment-matched measurement model of the system.
pub fn kf_step(belief: &GaussianBelief, system: &LinearSystem, y: &Vector) -> Result<GaussianBelief, FilterError> {
    let meas = moment_matched(system)?;
    kf_measurement_update(&kf_time_update(belief, system)?, system, y, &meas)
}

pub(crate) fn moment_matched(system: &LinearSystem) -> Result<GaussianSpec, FilterError> {
    system
        .measurement_noise
        .moment_match()
        .ok_or(FilterError::NotApplicable {
            estimator: "kf",
            reason: "measurement noise has no finite mean and variance",
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::test_support::*;
    use crate::linalg::Matrix;
    use crate::noise::{preset, NoiseModel};
    use approx::assert_relative_eq;

    #[test]
    fn identity_dynamics_without_noise_keep_belief() {
        let mut sys = scalar_system(1.0, 1.0, 1.0, preset("gaussian").unwrap());
        sys.process_noise.covariance = SymPdMatrix::from_diagonal(&[1e-300]).unwrap();
        let b = belief(&[0.7], &[2.0]);
        let pred = kf_time_update(&b, &sys).unwrap();
        assert_relative_eq!(pred.mean[0], 0.7);
        assert_relative_eq!(pred.cov.matrix()[(0, 0)], 2.0, epsilon = 1e-15);
    }

    #[test]
    fn scalar_time_update() {
        let sys = scalar_system(1.0, 1.0, 1.0, preset("gaussian").unwrap());
        let pred = kf_time_update(&belief(&[0.0], &[1.0]), &sys).unwrap();
        assert_eq!(pred.mean[0], 0.0);
        assert_eq!(pred.cov.matrix()[(0, 0)], 2.0);
    }

    #[test]
    fn rotation_preserves_identity_covariance() {
        let sys = rotation("gaussian");
        let pred = kf_time_update(&belief(&[0.0, 0.0], &[1.0, 0.0, 0.0, 1.0]), &sys).unwrap();
        assert_relative_eq!(pred.cov.matrix(), &(Matrix::identity(2, 2) * 1.05), epsilon = 1e-15);
    }

    #[test]
    fn scalar_measurement_update() {
        let sys = scalar_system(1.0, 1.0, 1.0, NoiseModel::diagonal_gaussian(&[0.0], &[1.0]).unwrap());
        let meas = sys.measurement_noise.moment_match().unwrap();
        let post = kf_measurement_update(&belief(&[0.0], &[2.0]), &sys, &Vector::from_element(1, 2.0), &meas).unwrap();
        assert_relative_eq!(post.cov.matrix()[(0, 0)], 2.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(post.mean[0], 4.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn zero_innovation_keeps_mean() {
        let sys = rotation("gaussian");
        let meas = sys.measurement_noise.moment_match().unwrap();
        let pred = belief(&[0.3, -0.1], &[1.0, 0.2, 0.2, 0.5]);
        let y = &sys.c * &pred.mean + &meas.mean;
        let post = kf_measurement_update(&pred, &sys, &y, &meas).unwrap();
        assert_relative_eq!(post.mean, pred.mean, epsilon = 1e-15);
    }

    #[test]
    fn uninformative_measurement_limit() {
        let sys = scalar_system(1.0, 1.0, 1.0, NoiseModel::diagonal_gaussian(&[0.0], &[1e12]).unwrap());
        let meas = sys.measurement_noise.moment_match().unwrap();
        let pred = belief(&[0.5], &[2.0]);
        let post = kf_measurement_update(&pred, &sys, &Vector::from_element(1, 40.0), &meas).unwrap();
        assert!((post.mean[0] - 0.5).abs() < 1e-9);
        assert!((post.cov.matrix()[(0, 0)] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn cauchy_is_not_applicable() {
        let sys = rotation("cauchy");
        let err = kf_step(&belief(&[0.0, 0.0], &[1.0, 0.0, 0.0, 1.0]), &sys, &Vector::zeros(1)).unwrap_err();
        assert!(matches!(err, FilterError::NotApplicable { estimator: "kf", .. }));
    }

    #[test]
    fn gain_form_fallback_agrees_with_information_form() {
        // Ill-conditioned prior forces the gain-form branch.
        let sys = rotation("gaussian");
        let meas = sys.measurement_noise.moment_match().unwrap();
        let pred = belief(&[0.1, 0.2], &[1e6, 0.0, 0.0, 1e-7]);
        let y = Vector::from_element(1, 2.0);
        let post = kf_measurement_update(&pred, &sys, &y, &meas).unwrap();
        // Joseph-free closed form: K = P Cᵀ / (C P Cᵀ + R)
        let p = pred.cov.matrix();
        let pct = p * sys.c.transpose();
        let s = (&sys.c * &pct)[(0, 0)] + 3.0;
        let k = &pct / s;
        let mean = &pred.mean + &k * (y[0] - (&sys.c * &pred.mean)[0]);
        let cov = p - &k * pct.transpose();
        assert_relative_eq!(post.mean, mean, max_relative = 1e-9);
        assert_relative_eq!(post.cov.matrix(), &cov, max_relative = 1e-6, epsilon = 1e-12);
    }
}

use serde::{Deserialize, Serialize};

use super::dpkf::{dpkf_update, MrSafeguardConfig};
use super::kalman::{kf_measurement_update, kf_time_update, moment_matched};
use super::masreliez::{masreliez_update, QuadratureConfig};
use super::mckf::{mckf_update, MckfConfig};
use super::particle::ParticleCloud;
use super::{GaussianBelief, LinearSystem, SimRng};
use crate::error::FilterError;
use crate::linalg::{is_positive_definite, Matrix, Vector};
use crate::noise::GaussianSpec;

pub const ESTIMATOR_NAMES: [&str; 5] = ["kf", "dpkf", "masreliez", "mckf", "pf"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Kf,
    Dpkf,
    Masreliez,
    Mckf,
    Pf,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 5] = [Self::Kf, Self::Dpkf, Self::Masreliez, Self::Mckf, Self::Pf];

    pub fn name(self) -> &'static str {
        ESTIMATOR_NAMES[self as usize]
    }

    pub fn from_name(name: &str) -> Result<Self, FilterError> {
        ESTIMATOR_NAMES
            .iter()
            .position(|n| *n == name)
            .map(|i| Self::ALL[i])
            .ok_or_else(|| FilterError::UnknownEstimator {
                name: name.to_string(),
                valid: ESTIMATOR_NAMES.join(", "),
            })
    }

    /// Estimators whose measurement update can only shrink the covariance.
    pub fn is_covariance_monotone(self) -> bool {
        matches!(self, Self::Kf | Self::Dpkf | Self::Mckf)
    }
}

impl std::str::FromStr for EstimatorKind {
    type Err = FilterError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::from_name(s)
    }
}

impl std::fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Tuning shared by all estimators; each uses only its own part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorParams {
    pub safeguard: MrSafeguardConfig,
    pub quadrature: QuadratureConfig,
    pub mckf: MckfConfig,
    pub particles: usize,
}

impl Default for EstimatorParams {
    fn default() -> Self {
        Self {
            safeguard: MrSafeguardConfig::default(),
            quadrature: QuadratureConfig::default(),
            mckf: MckfConfig::default(),
            particles: 1000,
        }
    }
}

impl EstimatorParams {
    pub fn validate(&self) -> Result<(), String> {
        self.safeguard.validate()?;
        self.quadrature.validate()?;
        self.mckf.validate()?;
        if self.particles == 0 {
            return Err("particle count must be at least 1".into());
        }
        Ok(())
    }
}

/// Counters of non-fatal events over a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterFlags {
    pub grid_clamped: usize,
    pub fp_not_converged: usize,
    pub pf_degenerate: usize,
    pub covariance_increase: usize,
}

/// Estimate after one measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub mean: Vector,
    pub cov: Matrix,
}

#[derive(Debug, Clone)]
enum State {
    Belief(GaussianBelief),
    Particles { cloud: ParticleCloud, w_factor: Matrix },
}

/// A running estimator. The first call to [`Filter::step`] corrects the
/// initial belief with `y_0`; later calls predict first.
#[derive(Debug, Clone)]
pub struct Filter {
    kind: EstimatorKind,
    params: EstimatorParams,
    meas: Option<GaussianSpec>,
    state: State,
    step: usize,
    flags: FilterFlags,
}

impl Filter {
    pub fn new(
        kind: EstimatorKind,
        params: EstimatorParams,
        system: &LinearSystem,
        initial: &GaussianBelief,
        rng: &mut SimRng,
    ) -> Result<Self, FilterError> {
        let meas = match kind {
            EstimatorKind::Kf => Some(moment_matched(system)?),
            EstimatorKind::Mckf => Some(moment_matched(system).map_err(|_| FilterError::NotApplicable {
                estimator: "mckf",
                reason: "measurement noise has no finite mean and variance",
            })?),
            _ => None,
        };
        if kind == EstimatorKind::Masreliez && system.meas_dim() != 1 {
            return Err(FilterError::NotApplicable {
                estimator: "masreliez",
                reason: "only scalar measurements are supported",
            });
        }
        let state = if kind == EstimatorKind::Pf {
            let cloud =
                ParticleCloud::from_gaussian(&initial.mean, &initial.cov.cholesky_factor(), params.particles, rng);
            State::Particles {
                cloud,
                w_factor: system.process_noise.covariance.cholesky_factor(),
            }
        } else {
            State::Belief(initial.clone())
        };
        Ok(Self {
            kind,
            params,
            meas,
            state,
            step: 0,
            flags: FilterFlags::default(),
        })
    }

    pub fn kind(&self) -> EstimatorKind {
        self.kind
    }

    pub fn flags(&self) -> FilterFlags {
        self.flags
    }

    pub fn steps_taken(&self) -> usize {
        self.step
    }

    pub fn step(&mut self, system: &LinearSystem, y: &Vector, rng: &mut SimRng) -> Result<StepReport, FilterError> {
        let k = self.step;
        let report = self.advance(system, y, rng).map_err(|e| e.at_step(k))?;
        if !(report.mean.iter().all(|v| v.is_finite()) && report.cov.iter().all(|v| v.is_finite())) {
            return Err(FilterError::diverged(k, "non-finite estimate"));
        }
        self.step += 1;
        Ok(report)
    }

    fn advance(&mut self, system: &LinearSystem, y: &Vector, rng: &mut SimRng) -> Result<StepReport, FilterError> {
        let first = self.step == 0;
        let (belief, cloud, w_factor) = match &mut self.state {
            State::Belief(b) => (Some(b), None, None),
            State::Particles { cloud, w_factor } => (None, Some(cloud), Some(w_factor)),
        };
        if let (Some(cloud), Some(wf)) = (cloud, w_factor) {
            if !first {
                cloud.propagate(system, wf, rng);
            }
            let s = cloud.update(system, y, rng);
            self.flags.pf_degenerate += s.degenerate as usize;
            return Ok(StepReport {
                mean: s.mean,
                cov: s.cov,
            });
        }
        let belief = belief.expect("gaussian state");
        let pred = if first {
            belief.clone()
        } else {
            kf_time_update(belief, system)?
        };
        let post = match self.kind {
            EstimatorKind::Kf => kf_measurement_update(&pred, system, y, self.meas.as_ref().expect("moments"))?,
            EstimatorKind::Dpkf => dpkf_update(&pred, system, y, &self.params.safeguard)?,
            EstimatorKind::Masreliez => {
                let out = masreliez_update(&pred, system, y, &self.params.quadrature)?;
                self.flags.grid_clamped += out.clamped as usize;
                out.belief
            }
            EstimatorKind::Mckf => {
                let out = mckf_update(&pred, system, y, &self.params.mckf)?;
                self.flags.fp_not_converged += !out.converged as usize;
                out.belief
            }
            EstimatorKind::Pf => unreachable!(),
        };
        if self.kind.is_covariance_monotone() {
            let n = pred.dim();
            let gap = pred.cov.matrix() - post.cov.matrix() + Matrix::identity(n, n) * 1e-12;
            if !is_positive_definite(&gap) {
                self.flags.covariance_increase += 1;
            }
        }
        let report = StepReport {
            mean: post.mean.clone(),
            cov: post.cov.matrix().clone(),
        };
        *belief = post;
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::kalman::kf_step;
    use crate::estimators::test_support::*;
    use rand::SeedableRng;

    #[test]
    fn names_round_trip() {
        for name in ESTIMATOR_NAMES {
            assert_eq!(EstimatorKind::from_name(name).unwrap().name(), name);
        }
        assert!(matches!(
            EstimatorKind::from_name("ukf"),
            Err(FilterError::UnknownEstimator { .. })
        ));
    }

    #[test]
    fn first_step_is_measurement_only() {
        let sys = rotation("gaussian");
        let init = belief(&[0.0, 0.0], &[1.0, 0.0, 0.0, 1.0]);
        let mut rng = SimRng::seed_from_u64(0);
        let mut f = Filter::new(EstimatorKind::Kf, EstimatorParams::default(), &sys, &init, &mut rng).unwrap();
        let y0 = Vector::from_element(1, 1.0);
        let y1 = Vector::from_element(1, -0.5);
        let r0 = f.step(&sys, &y0, &mut rng).unwrap();
        let meas = sys.measurement_noise.moment_match().unwrap();
        let direct = kf_measurement_update(&init, &sys, &y0, &meas).unwrap();
        assert_eq!(r0.mean, direct.mean);
        let r1 = f.step(&sys, &y1, &mut rng).unwrap();
        assert_eq!(r1.mean, kf_step(&direct, &sys, &y1).unwrap().mean);
        assert_eq!(f.flags().covariance_increase, 0);
    }

    #[test]
    fn inapplicable_estimators_rejected_up_front() {
        let sys = rotation("cauchy");
        let init = belief(&[0.0, 0.0], &[1.0, 0.0, 0.0, 1.0]);
        let mut rng = SimRng::seed_from_u64(0);
        for kind in [EstimatorKind::Kf, EstimatorKind::Mckf] {
            let err = Filter::new(kind, EstimatorParams::default(), &sys, &init, &mut rng).unwrap_err();
            assert!(matches!(err, FilterError::NotApplicable { .. }));
        }
        for kind in [EstimatorKind::Dpkf, EstimatorKind::Masreliez, EstimatorKind::Pf] {
            assert!(Filter::new(kind, EstimatorParams::default(), &sys, &init, &mut rng).is_ok());
        }
    }
}

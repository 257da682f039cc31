use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::estimators::{
    EstimatorKind, EstimatorParams, GaussianBelief, LinearSystem, MckfConfig, MrSafeguardConfig, QuadratureConfig,
};
use crate::linalg::{Matrix, SymPdMatrix, Vector};
use crate::noise::{make_distribution, preset_params, GaussianSpec, NoiseModel, FAMILY_NAMES};

pub const DEFAULT_SEED: u64 = 42;

/// Everything needed to reproduce one Monte Carlo experiment.
///
/// Serialized as a flat JSON object; any field may be omitted and falls back
/// to the rotation benchmark defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub a: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
    pub process_mean: Vec<f64>,
    pub process_cov: Vec<Vec<f64>>,
    pub initial_mean: Vec<f64>,
    pub initial_cov: Vec<Vec<f64>>,
    /// Preset or family name.
    pub noise: String,
    /// Overrides merged into the preset parameters (or the full set for a bare family).
    pub noise_params: BTreeMap<String, f64>,
    pub estimators: Vec<String>,
    pub runs: usize,
    pub steps: usize,
    pub base_seed: u64,
    pub particle_count: usize,
    pub grid_points: usize,
    pub grid_sigmas: f64,
    pub kernel_sigma: f64,
    pub fp_tol: f64,
    pub fp_max_iter: usize,
    pub epsilon_margin: f64,
    pub denom_floor: f64,
    pub mr_cap: f64,
    /// A run diverges when its RMSE exceeds this multiple of the baseline mean RMSE.
    pub divergence_factor: f64,
    /// Measure wall time. Turning it off makes every output byte-reproducible.
    pub timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let theta = std::f64::consts::PI / 18.0;
        let (s, c) = theta.sin_cos();
        let est = EstimatorParams::default();
        Self {
            a: vec![vec![c, -s], vec![s, c]],
            c: vec![vec![1.0, 1.0]],
            process_mean: vec![0.0, 0.0],
            process_cov: vec![vec![0.05, 0.0], vec![0.0, 0.05]],
            initial_mean: vec![0.0, 0.0],
            initial_cov: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            noise: "impulsive_gm".into(),
            noise_params: BTreeMap::new(),
            estimators: crate::estimators::ESTIMATOR_NAMES
                .iter()
                .map(|s| s.to_string())
                .collect(),
            runs: 200,
            steps: 200,
            base_seed: DEFAULT_SEED,
            particle_count: est.particles,
            grid_points: est.quadrature.points,
            grid_sigmas: est.quadrature.sigmas,
            kernel_sigma: est.mckf.kernel_sigma,
            fp_tol: est.mckf.fp_tol,
            fp_max_iter: est.mckf.fp_max_iter,
            epsilon_margin: est.safeguard.epsilon_margin,
            denom_floor: est.safeguard.denom_floor,
            mr_cap: est.safeguard.mr_cap,
            divergence_factor: 100.0,
            timing: true,
        }
    }
}

fn matrix(name: &str, rows: &[Vec<f64>]) -> Result<Matrix, ConfigError> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if r == 0 || c == 0 || rows.iter().any(|row| row.len() != c) {
        return Err(ConfigError::Invalid(format!(
            "`{name}` must be a non-empty rectangular matrix"
        )));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(ConfigError::Invalid(format!("`{name}` has non-finite entries")));
    }
    Ok(Matrix::from_fn(r, c, |i, j| rows[i][j]))
}

fn pd(name: &str, rows: &[Vec<f64>]) -> Result<SymPdMatrix, ConfigError> {
    SymPdMatrix::new(matrix(name, rows)?)
        .map_err(|e| ConfigError::Invalid(format!("`{name}` must be symmetric positive definite: {e}")))
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn noise_model(&self) -> Result<NoiseModel, ConfigError> {
        let mut params = preset_params(&self.noise).unwrap_or_default();
        if params.is_empty() && !FAMILY_NAMES.contains(&self.noise.as_str()) {
            return Err(crate::error::NoiseError::UnknownModel {
                name: self.noise.clone(),
                valid: FAMILY_NAMES.join(", "),
            }
            .into());
        }
        params.extend(self.noise_params.iter().map(|(k, v)| (k.clone(), *v)));
        Ok(make_distribution(&self.noise, &params)?)
    }

    pub fn system(&self) -> Result<LinearSystem, ConfigError> {
        let w = GaussianSpec::new(
            Vector::from_vec(self.process_mean.clone()),
            pd("process_cov", &self.process_cov)?,
        )?;
        let noise = self.noise_model()?;
        Ok(LinearSystem::new(
            matrix("a", &self.a)?,
            matrix("c", &self.c)?,
            w,
            noise,
        )?)
    }

    pub fn initial_belief(&self) -> Result<GaussianBelief, ConfigError> {
        Ok(GaussianBelief::new(
            Vector::from_vec(self.initial_mean.clone()),
            pd("initial_cov", &self.initial_cov)?,
        )?)
    }

    /// Requested estimators in canonical order, duplicates removed.
    pub fn estimator_kinds(&self) -> Result<Vec<EstimatorKind>, ConfigError> {
        let mut kinds = self
            .estimators
            .iter()
            .map(|n| EstimatorKind::from_name(n.trim()))
            .collect::<Result<Vec<_>, _>>()?;
        kinds.sort();
        kinds.dedup();
        if kinds.is_empty() {
            return Err(ConfigError::Invalid("no estimators selected".into()));
        }
        Ok(kinds)
    }

    pub fn estimator_params(&self) -> EstimatorParams {
        EstimatorParams {
            safeguard: MrSafeguardConfig {
                epsilon_margin: self.epsilon_margin,
                denom_floor: self.denom_floor,
                mr_cap: self.mr_cap,
            },
            quadrature: QuadratureConfig {
                points: self.grid_points,
                sigmas: self.grid_sigmas,
            },
            mckf: MckfConfig {
                kernel_sigma: self.kernel_sigma,
                fp_tol: self.fp_tol,
                fp_max_iter: self.fp_max_iter,
            },
            particles: self.particle_count,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.runs == 0 {
            return Err(ConfigError::Invalid("runs must be at least 1".into()));
        }
        if self.steps == 0 {
            return Err(ConfigError::Invalid("steps must be at least 1".into()));
        }
        if !(self.divergence_factor > 1.0) {
            return Err(ConfigError::Invalid("divergence_factor must exceed 1".into()));
        }
        self.estimator_params().validate().map_err(ConfigError::Invalid)?;
        self.estimator_kinds()?;
        let system = self.system()?;
        let init = self.initial_belief()?;
        if init.dim() != system.state_dim() {
            return Err(ConfigError::Invalid(format!(
                "initial belief has dimension {}, system state has {}",
                init.dim(),
                system.state_dim()
            )));
        }
        Ok(())
    }
}

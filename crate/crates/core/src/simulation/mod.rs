//! Trajectory generation and the Monte Carlo harness.
//!
//! Run `k` draws all of its randomness from `base_seed ^ k`: stream 0 of
//! that ChaCha seed produces the trajectory and measurements, and each
//! estimator gets its own stream, so every estimator sees the same data and
//! results do not depend on how runs are scheduled across workers.

mod config;
mod stats;

use std::collections::BTreeMap;
use std::time::Instant;

use rand::SeedableRng;
use rayon::prelude::*;
use serde::Serialize;

pub use config::{ExperimentConfig, DEFAULT_SEED};
pub use stats::{geometric_mean, mean_std, rmse_traces, timing_summary, RmseTrace, TimingSummary};

use crate::error::{ConfigError, FilterError};
use crate::estimators::{EstimatorKind, EstimatorParams, Filter, FilterFlags, GaussianBelief, LinearSystem, SimRng};
use crate::linalg::Vector;
use crate::noise::GaussianSpec;

/// States `x_0..x_T` and measurements `y_0..y_T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<Vector>,
    pub measurements: Vec<Vector>,
}

/// `x_0 ~ N(μ_0, P_0)`, `x_t = A x_{t-1} + w_t`, `y_t = C x_t + v_t` for `t = 0..=steps`.
pub fn simulate(system: &LinearSystem, initial: &GaussianBelief, steps: usize, rng: &mut SimRng) -> Trajectory {
    let x0 = GaussianSpec {
        mean: initial.mean.clone(),
        covariance: initial.cov.clone(),
    };
    let mut x = x0.sample(rng);
    let mut states = Vec::with_capacity(steps + 1);
    let mut measurements = Vec::with_capacity(steps + 1);
    for t in 0..=steps {
        if t > 0 {
            x = &system.a * &x + system.process_noise.sample(rng);
        }
        measurements.push(&system.c * &x + system.measurement_noise.sample(rng));
        states.push(x.clone());
    }
    Trajectory { states, measurements }
}

/// One estimator on one trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunResult {
    pub run: usize,
    /// `‖x̂_t − x_t‖²` for every completed step.
    pub sq_errors: Vec<f64>,
    pub rmse: f64,
    pub seconds: f64,
    pub diverged: bool,
    pub failure: Option<String>,
    pub flags: FilterFlags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CellStatus {
    Ok,
    Na,
    Diverged,
}

impl CellStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            CellStatus::Ok => "ok",
            CellStatus::Na => "na",
            CellStatus::Diverged => "diverged",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub estimator: EstimatorKind,
    pub noise: String,
    pub runs_completed: usize,
    pub diverged_count: usize,
    pub rmse_mean: Option<f64>,
    pub rmse_std: Option<f64>,
    pub time_geomean_norm: Option<f64>,
    pub status: CellStatus,
    /// Event counters summed over completed runs.
    pub flags: FilterFlags,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
    /// False when KF was not run and times are raw geometric means in seconds.
    pub timing_normalized: bool,
}

impl ResultTable {
    pub fn row(&self, kind: EstimatorKind) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.estimator == kind)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorRuns {
    pub kind: EstimatorKind,
    pub not_applicable: Option<String>,
    pub runs: Vec<RunResult>,
}

impl EstimatorRuns {
    pub fn completed(&self) -> impl Iterator<Item = &RunResult> {
        self.runs.iter().filter(|r| !r.diverged)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Experiment {
    pub table: ResultTable,
    pub estimators: Vec<EstimatorRuns>,
}

impl Experiment {
    /// Per-step traces of every estimator with at least two completed runs.
    pub fn traces(&self) -> Result<Vec<(EstimatorKind, RmseTrace)>, ConfigError> {
        self.estimators
            .iter()
            .filter(|e| e.not_applicable.is_none())
            .map(|e| {
                let runs: Vec<&[f64]> = e.completed().map(|r| r.sq_errors.as_slice()).collect();
                rmse_traces(&runs)
                    .map(|t| (e.kind, t))
                    .map_err(|err| ConfigError::Invalid(format!("{}: {}", e.kind, err)))
            })
            .collect()
    }

    pub fn runs(&self, kind: EstimatorKind) -> Option<&EstimatorRuns> {
        self.estimators.iter().find(|e| e.kind == kind)
    }
}

/// Per-run wall times below this are too close to clock resolution to use alone.
const MIN_RESOLVED_SECONDS: f64 = 1e-6;
const TIMING_BLOCK: usize = 10;

fn run_seed(base: u64, k: usize) -> u64 {
    base ^ k as u64
}

fn estimator_rng(seed: u64, kind: EstimatorKind) -> SimRng {
    let mut rng = SimRng::seed_from_u64(seed);
    rng.set_stream(1 + kind as u64);
    rng
}

#[allow(clippy::too_many_arguments)]
fn run_estimator(
    kind: EstimatorKind,
    params: EstimatorParams,
    system: &LinearSystem,
    initial: &GaussianBelief,
    traj: &Trajectory,
    run: usize,
    seed: u64,
    timing: bool,
) -> RunResult {
    let mut rng = estimator_rng(seed, kind);
    let mut sq_errors = Vec::with_capacity(traj.states.len());
    let mut failure = None;
    let mut flags = FilterFlags::default();
    let mut seconds = 0.0;
    match Filter::new(kind, params, system, initial, &mut rng) {
        Ok(mut filter) => {
            let start = timing.then(Instant::now);
            for (x, y) in traj.states.iter().zip(&traj.measurements) {
                match filter.step(system, y, &mut rng) {
                    Ok(est) => sq_errors.push((&est.mean - x).norm_squared()),
                    Err(e) => {
                        failure = Some(e.to_string());
                        break;
                    }
                }
            }
            if let Some(start) = start {
                seconds = start.elapsed().as_secs_f64();
            }
            flags = filter.flags();
        }
        Err(e) => failure = Some(e.to_string()),
    }
    let diverged = failure.is_some();
    let rmse = if diverged {
        f64::NAN
    } else {
        (sq_errors.iter().sum::<f64>() / sq_errors.len() as f64).sqrt()
    };
    RunResult {
        run,
        sq_errors,
        rmse,
        seconds,
        diverged,
        failure,
        flags,
    }
}

/// Completed-run times, summed over blocks of ten when single runs are too short to resolve.
fn timing_samples(runs: &EstimatorRuns) -> Vec<f64> {
    let times: Vec<f64> = runs.completed().map(|r| r.seconds).collect();
    if times.iter().all(|t| *t >= MIN_RESOLVED_SECONDS) {
        return times;
    }
    times.chunks(TIMING_BLOCK).map(|c| c.iter().sum()).collect()
}

pub fn run_monte_carlo(config: &ExperimentConfig) -> Result<Experiment, ConfigError> {
    config.validate()?;
    let system = config.system()?;
    let initial = config.initial_belief()?;
    let params = config.estimator_params();
    let kinds = config.estimator_kinds()?;

    // Applicability depends only on the model, so probe it once.
    let mut applicable = Vec::new();
    let mut estimators = Vec::new();
    for &kind in &kinds {
        let mut probe_rng = SimRng::seed_from_u64(0);
        let probe_params = EstimatorParams { particles: 1, ..params };
        match Filter::new(kind, probe_params, &system, &initial, &mut probe_rng) {
            Ok(_) => applicable.push(kind),
            Err(FilterError::NotApplicable { reason, .. }) => estimators.push(EstimatorRuns {
                kind,
                not_applicable: Some(reason.to_string()),
                runs: Vec::new(),
            }),
            Err(e) => return Err(e.into()),
        }
    }

    let per_run: Vec<Vec<RunResult>> = (0..config.runs)
        .into_par_iter()
        .map(|k| {
            let seed = run_seed(config.base_seed, k);
            let mut traj_rng = SimRng::seed_from_u64(seed);
            let traj = simulate(&system, &initial, config.steps, &mut traj_rng);
            applicable
                .iter()
                .map(|&kind| run_estimator(kind, params, &system, &initial, &traj, k, seed, config.timing))
                .collect()
        })
        .collect();

    let mut by_kind: Vec<EstimatorRuns> = applicable
        .iter()
        .map(|&kind| EstimatorRuns {
            kind,
            not_applicable: None,
            runs: Vec::with_capacity(config.runs),
        })
        .collect();
    for run in per_run {
        for (slot, result) in by_kind.iter_mut().zip(run) {
            slot.runs.push(result);
        }
    }

    mark_rmse_divergence(&mut by_kind, config.divergence_factor);
    estimators.extend(by_kind);
    estimators.sort_by_key(|e| e.kind);

    let noise = system.measurement_noise.name().to_string();
    let times: BTreeMap<EstimatorKind, Vec<f64>> = if config.timing {
        estimators
            .iter()
            .filter(|e| e.not_applicable.is_none())
            .map(|e| (e.kind, timing_samples(e)))
            .collect()
    } else {
        BTreeMap::new()
    };
    let timing = timing_summary(&times);
    let rows = estimators.iter().map(|e| summarize(e, &noise, &timing)).collect();
    Ok(Experiment {
        table: ResultTable {
            rows,
            timing_normalized: timing.normalized,
        },
        estimators,
    })
}

/// Runs whose RMSE exceeds `factor` × the baseline RMSE count as diverged.
/// The baseline is the median run RMSE of KF when it ran, otherwise of the
/// mode-anchored filter; the median keeps a single runaway run from
/// inflating the threshold.
fn mark_rmse_divergence(runs: &mut [EstimatorRuns], factor: f64) {
    let baseline = [EstimatorKind::Kf, EstimatorKind::Dpkf]
        .iter()
        .find_map(|k| runs.iter().find(|e| e.kind == *k))
        .and_then(|e| {
            let mut rmses: Vec<f64> = e.completed().map(|r| r.rmse).collect();
            rmses.sort_by(f64::total_cmp);
            match rmses.len() {
                0 => None,
                n if n % 2 == 1 => Some(rmses[n / 2]),
                n => Some(0.5 * (rmses[n / 2 - 1] + rmses[n / 2])),
            }
        });
    let Some(baseline) = baseline else { return };
    let limit = factor * baseline;
    for e in runs.iter_mut() {
        for r in e.runs.iter_mut().filter(|r| !r.diverged && r.rmse > limit) {
            r.diverged = true;
            r.failure = Some(format!("rmse {} exceeds {factor} x baseline {baseline}", r.rmse));
        }
    }
}

fn summarize(e: &EstimatorRuns, noise: &str, timing: &TimingSummary) -> ResultRow {
    let rmses: Vec<f64> = e.completed().map(|r| r.rmse).collect();
    let stats = mean_std(&rmses);
    let mut flags = FilterFlags::default();
    for r in e.completed() {
        flags.grid_clamped += r.flags.grid_clamped;
        flags.fp_not_converged += r.flags.fp_not_converged;
        flags.pf_degenerate += r.flags.pf_degenerate;
        flags.covariance_increase += r.flags.covariance_increase;
    }
    let status = if e.not_applicable.is_some() {
        CellStatus::Na
    } else if rmses.is_empty() {
        CellStatus::Diverged
    } else {
        CellStatus::Ok
    };
    ResultRow {
        estimator: e.kind,
        noise: noise.to_string(),
        runs_completed: rmses.len(),
        diverged_count: e.runs.iter().filter(|r| r.diverged).count(),
        rmse_mean: stats.map(|s| s.0),
        rmse_std: stats.map(|s| s.1),
        time_geomean_norm: if status == CellStatus::Ok {
            timing.geomean.get(&e.kind).copied()
        } else {
            None
        },
        status,
        flags,
    }
}

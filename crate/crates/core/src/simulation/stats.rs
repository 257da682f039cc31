use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::ConfigError;
use crate::estimators::EstimatorKind;

/// Cross-run RMSE at each step with a 95% interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RmseTrace {
    pub rmse: Vec<f64>,
    pub ci_low: Vec<f64>,
    pub ci_high: Vec<f64>,
}

const Z95: f64 = 1.959963984540054;

/// `RMSE_t = √(mean_k ‖e_t^k‖²)`; the interval is the normal interval of the
/// mean squared error mapped through `√` (lower end floored at zero).
pub fn rmse_traces(sq_errors: &[&[f64]]) -> Result<RmseTrace, ConfigError> {
    if sq_errors.len() < 2 {
        return Err(ConfigError::Invalid(format!(
            "traces need at least 2 completed runs, got {}",
            sq_errors.len()
        )));
    }
    let steps = sq_errors[0].len();
    if sq_errors.iter().any(|s| s.len() != steps) {
        return Err(ConfigError::Invalid("runs have different lengths".into()));
    }
    let n = sq_errors.len() as f64;
    let mut out = RmseTrace {
        rmse: Vec::with_capacity(steps),
        ci_low: Vec::with_capacity(steps),
        ci_high: Vec::with_capacity(steps),
    };
    for t in 0..steps {
        let mean = sq_errors.iter().map(|s| s[t]).sum::<f64>() / n;
        let var = sq_errors.iter().map(|s| (s[t] - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let half = Z95 * (var / n).sqrt();
        out.rmse.push(mean.sqrt());
        out.ci_low.push((mean - half).max(0.0).sqrt());
        out.ci_high.push((mean + half).sqrt());
    }
    Ok(out)
}

/// Geometric-mean run times, divided by the KF's when it is present.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingSummary {
    pub geomean: BTreeMap<EstimatorKind, f64>,
    /// False when KF is absent and `geomean` holds raw seconds.
    pub normalized: bool,
}

pub fn geometric_mean(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() || xs.iter().any(|x| !(*x > 0.0)) {
        return None;
    }
    Some((xs.iter().map(|x| x.ln()).sum::<f64>() / xs.len() as f64).exp())
}

pub fn timing_summary(times: &BTreeMap<EstimatorKind, Vec<f64>>) -> TimingSummary {
    let raw: BTreeMap<EstimatorKind, f64> = times
        .iter()
        .filter_map(|(k, t)| geometric_mean(t).map(|g| (*k, g)))
        .collect();
    match raw.get(&EstimatorKind::Kf).copied() {
        Some(kf) => TimingSummary {
            geomean: raw
                .into_iter()
                .map(|(k, g)| (k, if k == EstimatorKind::Kf { 1.0 } else { g / kf }))
                .collect(),
            normalized: true,
        },
        None => TimingSummary {
            geomean: raw,
            normalized: false,
        },
    }
}

/// Sample mean and (n − 1)-normalized standard deviation.
pub fn mean_std(xs: &[f64]) -> Option<(f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let std = if xs.len() < 2 {
        0.0
    } else {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    Some((mean, std))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_runs_have_zero_width_interval() {
        let run = [0.5, 1.0, 2.0];
        let t = rmse_traces(&[&run, &run, &run]).unwrap();
        assert_eq!(t.ci_low, t.rmse);
        assert_eq!(t.ci_high, t.rmse);
    }

    #[test]
    fn unit_error_gives_unit_rmse() {
        let run = [1.0];
        assert_eq!(rmse_traces(&[&run, &run]).unwrap().rmse, vec![1.0]);
    }

    #[test]
    fn single_run_rejected() {
        assert!(rmse_traces(&[&[1.0]]).is_err());
    }

    #[test]
    fn interval_contains_estimate() {
        let a = [1.0, 0.2];
        let b = [3.0, 0.1];
        let t = rmse_traces(&[&a, &b]).unwrap();
        assert_eq!(t.rmse[0], 2f64.sqrt());
        for i in 0..2 {
            assert!(t.ci_low[i] <= t.rmse[i] && t.rmse[i] <= t.ci_high[i]);
        }
    }

    #[test]
    fn timing_normalization() {
        let times: BTreeMap<_, _> = [
            (EstimatorKind::Kf, vec![1.0, 1.0]),
            (EstimatorKind::Dpkf, vec![1.0, 4.0]),
            (EstimatorKind::Pf, vec![3.0, 3.0]),
        ]
        .into_iter()
        .collect();
        let s = timing_summary(&times);
        assert!(s.normalized);
        assert_eq!(s.geomean[&EstimatorKind::Kf], 1.0);
        assert!((s.geomean[&EstimatorKind::Dpkf] - 2.0).abs() < 1e-15);
        assert!((s.geomean[&EstimatorKind::Pf] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn timing_without_kf_is_raw() {
        let times: BTreeMap<_, _> = [(EstimatorKind::Dpkf, vec![2.0, 8.0])].into_iter().collect();
        let s = timing_summary(&times);
        assert!(!s.normalized);
        assert!((s.geomean[&EstimatorKind::Dpkf] - 4.0).abs() < 1e-15);
    }

    #[test]
    fn equal_times_normalize_to_one() {
        let times: BTreeMap<_, _> = EstimatorKind::ALL.iter().map(|k| (*k, vec![0.3, 0.3])).collect();
        assert!(timing_summary(&times).geomean.values().all(|g| (g - 1.0).abs() < 1e-15));
    }
}

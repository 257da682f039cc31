use std::fmt::Write;

use dpkf_core::estimators::EstimatorKind;
use dpkf_core::simulation::{ResultRow, RmseTrace};

pub const RESULT_HEADER: &str =
    "estimator,noise,runs_completed,diverged_count,rmse_mean,rmse_std,time_geomean_norm,status";

/// 17 significant digits, so values round-trip exactly.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(float).unwrap_or_default()
}

pub fn results_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from(RESULT_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.estimator,
            r.noise,
            r.runs_completed,
            r.diverged_count,
            opt(r.rmse_mean),
            opt(r.rmse_std),
            opt(r.time_geomean_norm),
            r.status.as_str()
        )
        .unwrap();
    }
    out
}

pub fn results_json(rows: &[ResultRow]) -> String {
    let mut s = serde_json::to_string_pretty(rows).expect("rows serialize");
    s.push('\n');
    s
}

pub fn traces_csv(traces: &[(EstimatorKind, RmseTrace)]) -> String {
    let mut out = String::from("step");
    for (k, _) in traces {
        write!(out, ",{k}_rmse_mean,{k}_ci_low,{k}_ci_high").unwrap();
    }
    out.push('\n');
    let steps = traces.first().map_or(0, |(_, t)| t.rmse.len());
    for t in 0..steps {
        write!(out, "{t}").unwrap();
        for (_, tr) in traces {
            write!(
                out,
                ",{},{},{}",
                float(tr.rmse[t]),
                float(tr.ci_low[t]),
                float(tr.ci_high[t])
            )
            .unwrap();
        }
        out.push('\n');
    }
    out
}

/// Aligned table for the terminal: `mean ± sd`, `N/A`, `diverged`.
pub fn summary(rows: &[ResultRow]) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "{:<10} {:<14} {:>18} {:>9} {:>9}",
        "estimator", "noise", "rmse", "time", "diverged"
    )
    .unwrap();
    for r in rows {
        let rmse = match (r.status.as_str(), r.rmse_mean, r.rmse_std) {
            ("na", ..) => "N/A".to_string(),
            ("diverged", ..) => "diverged".to_string(),
            (_, Some(m), Some(s)) => format!("{m:.3} ± {s:.3}"),
            _ => String::new(),
        };
        let time = r
            .time_geomean_norm
            .map(|t| format!("{t:.2}"))
            .unwrap_or_else(|| "-".into());
        writeln!(
            out,
            "{:<10} {:<14} {:>18} {:>9} {:>9}",
            r.estimator.name(),
            r.noise,
            rmse,
            time,
            r.diverged_count
        )
        .unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_carry_seventeen_digits() {
        let s = float(0.1);
        assert_eq!(s, "1.0000000000000001e-1");
        assert_eq!(s.parse::<f64>().unwrap(), 0.1);
        let mantissa = s.split('e').next().unwrap().replace('.', "");
        assert_eq!(mantissa.len(), 17);
    }
}

use std::process::{Command, Output};

fn dpkf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dpkf"))
        .args(args)
        .env_remove("BF_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

const SMALL: &[&str] = &["--runs", "4", "--steps", "20", "--no-timing"];

fn run(extra: &[&str]) -> Output {
    let mut args = vec!["run"];
    args.extend_from_slice(SMALL);
    args.extend_from_slice(extra);
    dpkf(&args)
}

#[test]
fn run_writes_one_row_per_estimator() {
    let o = run(&["--noise", "gamma", "--estimators", "kf,dpkf"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let lines: Vec<_> = out.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("estimator,noise,runs_completed"));
    assert!(lines[1].starts_with("kf,gamma,4,0,"));
    assert!(lines[2].starts_with("dpkf,gamma,4,0,"));
    assert!(lines[1].ends_with(",ok"));
}

#[test]
fn cauchy_kf_is_not_applicable() {
    let o = run(&["--noise", "cauchy", "--estimators", "kf,dpkf"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("kf,cauchy,0,0,,,,na"), "{out}");
    assert!(stderr(&o).contains("N/A"));
}

#[test]
fn missing_config_is_an_io_error_naming_the_path() {
    let o = dpkf(&["run", "--config", "/nonexistent/exp.json"]);
    assert_eq!(o.status.code(), Some(3));
    let err = stderr(&o);
    assert!(err.starts_with("error[io]: /nonexistent/exp.json"), "{err}");
    assert_eq!(err.trim_end().lines().count(), 1);
}

#[test]
fn bad_config_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("exp.json");
    std::fs::write(&path, r#"{"runs": 3, "no_such_field": 1}"#).unwrap();
    let o = dpkf(&["run", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error[config]:"));
}

#[test]
fn unknown_flag_is_a_single_line_usage_error() {
    let o = dpkf(&["run", "--bogus"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.starts_with("error[usage]:"), "{err}");
    assert_eq!(err.trim_end().lines().count(), 1);
}

#[test]
fn unknown_estimator_is_rejected() {
    let o = run(&["--estimators", "kf,ukf"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error[config]:"));
}

#[test]
fn list_is_stable_and_complete() {
    let a = dpkf(&["list"]);
    let b = dpkf(&["list"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let out = stdout(&a);
    assert!(out.contains("(h) levy  μ=1 c=3"), "{out}");
    for name in ["kf", "dpkf", "masreliez", "mckf", "pf"] {
        assert!(out.lines().any(|l| l.trim() == name), "{name} missing");
    }
}

#[test]
fn trace_needs_two_runs() {
    let o = dpkf(&["trace", "--runs", "1", "--steps", "5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("at least 2 runs"));
}

#[test]
fn trace_columns_follow_estimators() {
    let dir = tempfile::tempdir().unwrap();
    let one = dir.path().join("one.csv");
    let o = dpkf(&[
        "trace",
        "--runs",
        "3",
        "--steps",
        "10",
        "--estimators",
        "dpkf",
        "--out",
        one.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&one).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "step,dpkf_rmse_mean,dpkf_ci_low,dpkf_ci_high");
    assert_eq!(lines.len(), 12);
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 4));

    let all = dir.path().join("all.csv");
    let o = dpkf(&[
        "trace",
        "--runs",
        "2",
        "--steps",
        "4",
        "--particles",
        "50",
        "--out",
        all.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&all).unwrap();
    assert_eq!(text.lines().next().unwrap().split(',').count(), 1 + 3 * 5);
}

#[test]
fn seed_from_environment_matches_flag() {
    let with_env = Command::new(env!("CARGO_BIN_EXE_dpkf"))
        .args([
            "run",
            "--runs",
            "3",
            "--steps",
            "15",
            "--no-timing",
            "--estimators",
            "dpkf",
        ])
        .env("BF_SEED", "1234")
        .output()
        .unwrap();
    let base = [
        "run",
        "--runs",
        "3",
        "--steps",
        "15",
        "--no-timing",
        "--estimators",
        "dpkf",
    ];
    let with_flag = dpkf(&[&base[..], &["--seed", "1234"]].concat());
    let default = dpkf(&base);
    assert!(with_env.status.success());
    assert_eq!(with_env.stdout, with_flag.stdout);
    assert_ne!(with_env.stdout, default.stdout);
}

#[test]
fn flag_overrides_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("exp.json");
    std::fs::write(
        &path,
        r#"{"runs": 2, "steps": 10, "base_seed": 9, "estimators": ["kf"], "timing": false}"#,
    )
    .unwrap();
    let o = dpkf(&["run", "--config", path.to_str().unwrap(), "--runs", "5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).lines().nth(1).unwrap().starts_with("kf,impulsive_gm,5,"));
}

#[test]
fn output_is_identical_across_worker_counts() {
    let args = [
        "--noise",
        "bimodal_gm",
        "--estimators",
        "dpkf,mckf,pf",
        "--particles",
        "200",
    ];
    let mut a = args.to_vec();
    a.extend(["--workers", "1"]);
    let mut b = args.to_vec();
    b.extend(["--workers", "3"]);
    let (oa, ob) = (run(&a), run(&b));
    assert!(oa.status.success() && ob.status.success());
    assert_eq!(oa.stdout, ob.stdout);
}

#[test]
fn json_rows_parse() {
    let o = run(&["--estimators", "kf,dpkf", "--format", "json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1]["estimator"], "dpkf");
    assert_eq!(rows[0]["status"], "ok");
}

#[test]
fn zero_workers_is_rejected() {
    let o = run(&["--workers", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

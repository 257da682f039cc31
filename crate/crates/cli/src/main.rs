mod args;
mod output;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use thiserror::Error;

use args::{Cli, Command, Format, Overrides, RunArgs, TableArgs, TraceArgs};
use dpkf_core::estimators::ESTIMATOR_NAMES;
use dpkf_core::noise::{preset, PRESET_NAMES};
use dpkf_core::simulation::{run_monte_carlo, CellStatus, Experiment, ExperimentConfig, ResultRow};
use dpkf_core::ConfigError;

#[derive(Debug, Error)]
enum CliError {
    #[error("error[usage]: {0}")]
    Usage(String),
    #[error("error[config]: {0}")]
    Config(String),
    #[error("error[io]: {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("error[diverged]: every estimator diverged in every run")]
    AllDiverged,
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            CliError::Io { .. } => 3,
            CliError::AllDiverged => 4,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn load_config(overrides: &Overrides) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &overrides.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(io_err(path))?;
            ExperimentConfig::from_json(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        None => ExperimentConfig::default(),
    };
    overrides.apply(&mut cfg);
    Ok(cfg)
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(io_err(p)),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(io_err(Path::new("<stdout>"))),
    }
}

fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match workers {
        None => Ok(f()),
        Some(0) => Err(CliError::Config("--workers must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Config(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

fn all_diverged(rows: &[ResultRow]) -> bool {
    let ran: Vec<_> = rows.iter().filter(|r| r.status != CellStatus::Na).collect();
    !ran.is_empty() && ran.iter().all(|r| r.status == CellStatus::Diverged)
}

fn experiment(cfg: &ExperimentConfig, workers: Option<usize>) -> Result<Experiment, CliError> {
    Ok(with_workers(workers, || run_monte_carlo(cfg))??)
}

fn render(rows: &[ResultRow], format: Format) -> String {
    match format {
        Format::Csv => output::results_csv(rows),
        Format::Json => output::results_json(rows),
    }
}

fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    let mut cfg = load_config(&args.overrides)?;
    if let Some(noise) = args.noise {
        cfg.noise = noise;
        cfg.noise_params.clear();
    }
    if let Some(est) = args.estimators {
        cfg.estimators = est;
    }
    if args.traces.is_some() && cfg.runs < 2 {
        return Err(CliError::Config(format!(
            "traces need at least 2 runs, got {}",
            cfg.runs
        )));
    }
    let exp = experiment(&cfg, args.overrides.workers)?;
    write_out(args.out.as_deref(), &render(&exp.table.rows, args.format))?;
    if let Some(path) = &args.traces {
        write_out(Some(path), &output::traces_csv(&exp.traces()?))?;
    }
    eprint!("{}", output::summary(&exp.table.rows));
    if all_diverged(&exp.table.rows) {
        return Err(CliError::AllDiverged);
    }
    Ok(())
}

fn cmd_reproduce_table2(args: TableArgs) -> Result<(), CliError> {
    let base = load_config(&args.overrides)?;
    let mut rows = Vec::new();
    for name in PRESET_NAMES {
        let mut cfg = base.clone();
        cfg.noise = name.to_string();
        cfg.noise_params.clear();
        if let Some(est) = &args.estimators {
            cfg.estimators = est.clone();
        }
        let exp = experiment(&cfg, args.overrides.workers)?;
        eprint!("{}", output::summary(&exp.table.rows));
        rows.extend(exp.table.rows);
    }
    write_out(args.out.as_deref(), &render(&rows, args.format))?;
    if all_diverged(&rows) {
        return Err(CliError::AllDiverged);
    }
    Ok(())
}

fn cmd_trace(args: TraceArgs) -> Result<(), CliError> {
    let mut cfg = load_config(&args.overrides)?;
    if let Some(noise) = args.noise {
        cfg.noise = noise;
        cfg.noise_params.clear();
    }
    if let Some(est) = args.estimators {
        cfg.estimators = est;
    }
    if cfg.runs < 2 {
        return Err(CliError::Config(format!(
            "traces need at least 2 runs, got {}",
            cfg.runs
        )));
    }
    let exp = experiment(&cfg, args.overrides.workers)?;
    write_out(args.out.as_deref(), &output::traces_csv(&exp.traces()?))
}

fn cmd_list() -> Result<(), CliError> {
    let mut out = String::from("noise presets:\n");
    for (i, name) in PRESET_NAMES.iter().enumerate() {
        let model = preset(name).map_err(|e| CliError::Config(e.to_string()))?;
        out.push_str(&format!("  ({}) {}\n", (b'a' + i as u8) as char, model.describe()));
    }
    out.push_str("estimators:\n");
    for name in ESTIMATOR_NAMES {
        out.push_str(&format!("  {name}\n"));
    }
    write_out(None, &out)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg
                .lines()
                .next()
                .unwrap_or("invalid arguments")
                .trim_start_matches("error: ");
            eprintln!("{}", CliError::Usage(first.to_string()));
            return ExitCode::from(2);
        }
    };
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::ReproduceTable2(a) => cmd_reproduce_table2(a),
        Command::Trace(a) => cmd_trace(a),
        Command::List => cmd_list(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_string().replace('\n', " "));
            ExitCode::from(e.code())
        }
    }
}

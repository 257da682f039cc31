use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dpkf_core::ExperimentConfig;

#[derive(Debug, Parser)]
#[command(
    name = "dpkf",
    version,
    about = "Monte Carlo comparison of recursive estimators under non-Gaussian measurement noise"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one Monte Carlo experiment and write the result table.
    Run(RunArgs),
    /// Run every noise preset with every applicable estimator.
    #[command(name = "reproduce-table2")]
    ReproduceTable2(TableArgs),
    /// Write per-step cross-run RMSE with 95% intervals.
    Trace(TraceArgs),
    /// List noise presets and estimators.
    List,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Flags that override fields of the experiment config.
#[derive(Debug, Clone, Args)]
pub struct Overrides {
    /// Flat JSON experiment config; flags below take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long, env = "BF_SEED")]
    pub seed: Option<u64>,
    #[arg(long)]
    pub particles: Option<usize>,
    #[arg(long)]
    pub kernel_sigma: Option<f64>,
    #[arg(long)]
    pub grid_points: Option<usize>,
    #[arg(long)]
    pub grid_sigmas: Option<f64>,
    /// Cap on parallel worker threads.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Skip wall-clock timing so output is byte-reproducible.
    #[arg(long)]
    pub no_timing: bool,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub overrides: Overrides,
    #[arg(long)]
    pub noise: Option<String>,
    /// Comma-separated estimator names.
    #[arg(long, value_delimiter = ',')]
    pub estimators: Option<Vec<String>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Also write per-step traces to this path.
    #[arg(long)]
    pub traces: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    #[command(flatten)]
    pub overrides: Overrides,
    #[arg(long, value_delimiter = ',')]
    pub estimators: Option<Vec<String>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    #[command(flatten)]
    pub overrides: Overrides,
    #[arg(long)]
    pub noise: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub estimators: Option<Vec<String>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        macro_rules! set {
            ($($field:ident => $target:ident),*) => {
                $(if let Some(v) = self.$field { cfg.$target = v; })*
            };
        }
        set!(runs => runs, steps => steps, seed => base_seed, particles => particle_count,
             kernel_sigma => kernel_sigma, grid_points => grid_points, grid_sigmas => grid_sigmas);
        if self.no_timing {
            cfg.timing = false;
        }
    }
}

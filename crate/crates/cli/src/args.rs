use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "rhognf", version, about = "Gaussian-copula flow sensitivity analysis for causal effects")]
pub struct Cli {
    /// TOML file supplying defaults: top-level keys, overridden by a table
    /// named after the subcommand, overridden by flags.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Output directory [default: $RHOGNF_OUT_DIR, else the working directory].
    #[arg(long, global = true, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a dataset from a benchmark DGP; ground truth goes to a JSON sidecar.
    Simulate(SimulateArgs),
    /// Fit the flow at one copula correlation.
    Fit(FitArgs),
    /// Fit across a rho grid and estimate the effect curve.
    Sweep(SweepArgs),
    /// Assumption-free bounds for binary (or summed binary) outcomes.
    Bounds(BoundsArgs),
    /// Merge sweep outputs into one plot-ready table.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// `table1:ROW` (1-6), `binary`, `categorical`, or a DGP config file.
    #[arg(long)]
    pub dgp: Option<String>,
    /// Number of rows.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file stem.
    #[arg(long)]
    pub name: Option<String>,
}

/// Dataset and column schema shared by `fit` and `sweep`.
#[derive(Debug, Args)]
pub struct DataArgs {
    /// CSV dataset with header `a,y`.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Treatment column kind: `continuous` or `discrete:K`.
    #[arg(long)]
    pub a_kind: Option<String>,
    /// Outcome column kind: `continuous` or `discrete:K`.
    #[arg(long)]
    pub y_kind: Option<String>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Spline bins per transform.
    #[arg(long)]
    pub bins: Option<usize>,
    /// Conditioner hidden widths, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub hidden: Option<Vec<usize>>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub train: TrainArgs,
    /// Copula correlation in (-1, 1).
    #[arg(long, allow_hyphen_values = true)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub train: TrainArgs,
    /// Comma-separated increasing rho values in (-1, 1).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub grid: Option<Vec<f64>>,
    /// Monte Carlo draws per grid point.
    #[arg(long)]
    pub n_samples: Option<usize>,
    /// Instead of `--data`, simulate and sweep this many random binary DGPs
    /// (seeds `seed .. seed + count`) and write a summary.
    #[arg(long, value_name = "COUNT")]
    pub binary_batch: Option<usize>,
    /// Rows per simulated DGP in batch mode.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    /// Binary `a,y` datasets; several files are treated as outcome
    /// dimensions of the same units and their bounds are summed.
    pub data: Vec<PathBuf>,
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Sweep JSON outputs to merge.
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    pub name: Option<String>,
}

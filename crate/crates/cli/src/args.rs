use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "zib",
    version,
    about = "Bayesian zero-inflated Bernoulli fits and simulation studies"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the model to a CSV file: closed-form marginals without
    /// covariates, adaptive Metropolis otherwise.
    Fit(FitArgs),
    /// Prior and posterior density grids of omega and p (no covariates).
    Posterior(PosteriorArgs),
    /// Run a simulation grid.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SigmaModeArg {
    Fixed,
    Hyper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Nocov,
    Cov,
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(format!("expected 'lo,hi', got '{s}'"));
    }
    let num = |v: &str| {
        v.parse::<f64>()
            .map_err(|_| format!("'{v}' is not a number"))
    };
    Ok((num(parts[0])?, num(parts[1])?))
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// CSV file with a header row.
    #[arg(long)]
    pub data: PathBuf,
    /// Name of the 0/1 outcome column.
    #[arg(long, default_value = "y")]
    pub outcome: String,
    /// Covariates of the exposure (zero-inflation) part.
    #[arg(long, value_delimiter = ',')]
    pub zi_cols: Vec<String>,
    /// Covariates of the event part.
    #[arg(long, value_delimiter = ',')]
    pub nzi_cols: Vec<String>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct PriorArgs {
    /// Uniform prior support of omega.
    #[arg(long, value_name = "LO,HI", value_parser = parse_pair)]
    pub omega_prior: Option<(f64, f64)>,
    /// Uniform prior support of p.
    #[arg(long, value_name = "LO,HI", value_parser = parse_pair)]
    pub p_prior: Option<(f64, f64)>,
    /// Standard deviation of the normal coefficient priors.
    #[arg(long, value_name = "S")]
    pub coef_sigma: Option<f64>,
    #[arg(long, value_enum)]
    pub sigma_mode: Option<SigmaModeArg>,
    /// Half-normal scale of the prior on each coefficient sd in hyper mode.
    #[arg(long)]
    pub hyper_scale: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ChainArgs {
    #[arg(long, value_name = "N")]
    pub chains: Option<usize>,
    /// Post-warmup draws per chain.
    #[arg(long, value_name = "N")]
    pub iter: Option<usize>,
    #[arg(long, value_name = "N")]
    pub warmup: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (default: available parallelism).
    #[arg(long, value_name = "N")]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub prior: PriorArgs,
    #[command(flatten)]
    pub chains: ChainArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct PosteriorArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub prior: PriorArgs,
    /// Grid points per parameter.
    #[arg(long, default_value_t = zib_core::analytic::DEFAULT_PLOT_POINTS)]
    pub points: usize,
    #[arg(long, value_name = "N")]
    pub threads: Option<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// TOML file with grid settings; command-line flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Sample sizes.
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub omega: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub p: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub theta0: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub theta1: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub theta2: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub beta0: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub beta1: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub beta2: Option<Vec<f64>>,
    #[command(flatten)]
    pub prior: PriorArgs,
    #[command(flatten)]
    pub chains: ChainArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

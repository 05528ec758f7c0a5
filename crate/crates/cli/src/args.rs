use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "sieve-roc",
    version,
    about = "Time-dependent ROC/AUC for interval-censored event times via sieve maximum likelihood"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate an interval-censored dataset from the Clayton copula model
    Simulate(SimulateArgs),
    /// Fit the sieve model to a dataset and write it as JSON
    Fit(FitArgs),
    /// Write the ROC curve of a fitted model at one horizon
    Roc(RocArgs),
    /// Print the AUC of a fitted model at one or more horizons
    Auc(AucArgs),
    /// BCa bootstrap confidence interval for the AUC
    Ci(CiArgs),
    /// True AUC of the copula model
    Oracle(OracleArgs),
    /// Monte Carlo bias / spread / coverage table
    #[command(name = "replicate-table1")]
    ReplicateTable1(TableArgs),
    /// Histogram of current status times (knot anchors)
    Histogram(HistogramArgs),
}

/// Copula model parameters; unset values come from `--config` or the defaults.
#[derive(Debug, Args, Clone, Default)]
pub struct ModelArgs {
    /// TOML file of model parameters (lambda, alpha, beta, scale, tau, rho, gap, n, seed)
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Kendall's tau between event time and marker
    #[arg(long)]
    pub tau: Option<f64>,
    /// Target right-censoring rate
    #[arg(long)]
    pub rho: Option<f64>,
    /// Exponential hazard of the event time
    #[arg(long)]
    pub lambda: Option<f64>,
    /// First beta shape parameter of the marker
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Second beta shape parameter of the marker
    #[arg(long)]
    pub beta: Option<f64>,
    /// Marker range upper end
    #[arg(long)]
    pub scale: Option<f64>,
    /// Spacing between scheduled assessments
    #[arg(long)]
    pub gap: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Dataset CSV destination (stdout when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write latent event times and markers (`t_true,m`)
    #[arg(long)]
    pub latent: Option<PathBuf>,
}

/// Dataset location and domain overrides.
#[derive(Debug, Args, Clone)]
pub struct DataArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Upper end of the time domain (default: largest observed time)
    #[arg(long = "tau-t")]
    pub tau_t: Option<f64>,
    /// Upper end of the marker domain (default: largest observed marker)
    #[arg(long = "tau-m")]
    pub tau_m: Option<f64>,
}

/// Sieve and optimizer settings.
#[derive(Debug, Args, Clone)]
pub struct SieveArgs {
    /// Spline order
    #[arg(long, default_value_t = 3)]
    pub order: usize,
    /// Interior time knots (default: nearest integer to n^(1/3))
    #[arg(long = "time-knots")]
    pub time_knots: Option<usize>,
    /// Interior marker knots (default: nearest integer to n^(1/3))
    #[arg(long = "marker-knots")]
    pub marker_knots: Option<usize>,
    #[arg(long = "max-iter", default_value_t = 2000)]
    pub max_iter: usize,
    /// Absolute tolerance on the change in summed log-likelihood
    #[arg(long = "loglik-tol", default_value_t = 1e-7)]
    pub loglik_tol: f64,
    /// Projected-gradient norm tolerance
    #[arg(long = "pg-tol", default_value_t = 1e-6)]
    pub pg_tol: f64,
    /// Start each line search from a Barzilai-Borwein step
    #[arg(long = "adaptive-step")]
    pub adaptive_step: bool,
    /// ROC grid size used for AUC
    #[arg(long, default_value_t = 1001)]
    pub grid: usize,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub sieve: SieveArgs,
    /// Model JSON destination (stdout when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RocArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub t: f64,
    #[arg(long, default_value_t = 1001)]
    pub grid: usize,
    /// ROC CSV destination (stdout when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also draw the curve as SVG
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AucArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Horizon(s); repeat or separate with commas
    #[arg(long, value_delimiter = ',', required = true)]
    pub t: Vec<f64>,
    #[arg(long, default_value_t = 1001)]
    pub grid: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AccelArg {
    Jackknife,
    None,
}

#[derive(Debug, Args, Clone)]
pub struct BootstrapArgs {
    /// Bootstrap replicates
    #[arg(long = "B", default_value_t = 1000)]
    pub replicates: usize,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    /// Acceleration estimate; `none` gives the bias-corrected interval
    #[arg(long, value_enum, default_value_t = AccelArg::Jackknife)]
    pub accel: AccelArg,
}

#[derive(Debug, Args)]
pub struct CiArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub sieve: SieveArgs,
    #[command(flatten)]
    pub bootstrap: BootstrapArgs,
    /// Horizon(s); repeat or separate with commas
    #[arg(long, value_delimiter = ',', required = true)]
    pub t: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// CSV destination (stdout when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Horizon(s); repeat or separate with commas
    #[arg(long, value_delimiter = ',', required = true)]
    pub t: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    #[command(flatten)]
    pub sieve: SieveArgs,
    /// Monte Carlo replicates per scenario
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    /// Sample size(s)
    #[arg(long, value_delimiter = ',', default_value = "300")]
    pub n: Vec<usize>,
    /// Kendall's tau value(s)
    #[arg(long, value_delimiter = ',', default_value = "0.2,0.6")]
    pub tau: Vec<f64>,
    /// Right-censoring rate(s)
    #[arg(long, value_delimiter = ',', default_value = "0.3,0.5")]
    pub rho: Vec<f64>,
    /// Horizon(s)
    #[arg(long, value_delimiter = ',', default_value = "12,28")]
    pub t: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Bootstrap replicates per interval; omit to skip coverage
    #[arg(long = "B")]
    pub replicates: Option<usize>,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[arg(long, value_enum, default_value_t = AccelArg::Jackknife)]
    pub accel: AccelArg,
    /// Table CSV destination (stdout when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HistogramArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 30)]
    pub bins: usize,
    /// Histogram CSV destination (stdout when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

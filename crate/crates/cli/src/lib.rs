//! Command-line front end for `distreg`: distances between distribution files,
//! conditional-law predictions, rate studies, bound tables, weight diagnostics
//! and class certification.
//!
//! Exit codes: 0 success or passing verdict, 1 failing verdict, 2 usage
//! error, 3 data error.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod io;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{CliError, EXIT_OK, EXIT_USAGE};

#[derive(Debug, Parser)]
#[command(name = "distreg", version, about = "Conditional distribution regression under Wasserstein loss")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Wasserstein distance between two distribution files (columns y1..yd,weight).
    Distance(DistanceArgs),
    /// Weighted empirical conditional distributions at query points.
    Predict(PredictArgs),
    /// Monte-Carlo risk curve and log-log slope check.
    Rates(RatesArgs),
    /// Closed-form risk bounds over a grid of n and h or κ.
    Bounds(BoundsArgs),
    /// Monte-Carlo estimates of E[max W] and of the weight mass beyond eps.
    StoneCheck(StoneArgs),
    /// Grid check that synthetic presets satisfy their declared class.
    Certify(CertifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Auto,
    Quantile,
    Cdf,
    Exact,
    Sliced,
    MaxSliced,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeName {
    Kernel,
    Knn,
}

#[derive(Debug, Args)]
pub struct DistanceArgs {
    pub a: PathBuf,
    pub b: PathBuf,
    /// Order p ≥ 1.
    #[arg(short, long, default_value_t = 1.0)]
    pub p: f64,
    #[arg(long, value_enum, default_value_t = Method::Auto)]
    pub method: Method,
    /// Directions for the sliced estimate; grid size for max-sliced in d = 2.
    #[arg(long, default_value_t = 1000)]
    pub directions: usize,
    /// Stopping tolerance of the max-sliced search.
    #[arg(long, default_value_t = 1e-10)]
    pub tolerance: f64,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Training file with columns x1..xk,y1..yd.
    #[arg(long)]
    pub train: PathBuf,
    /// Query file with columns x1..xk.
    #[arg(long)]
    pub queries: PathBuf,
    /// Kernel bandwidth h.
    #[arg(long, conflicts_with = "kappa", required_unless_present = "kappa")]
    pub bandwidth: Option<f64>,
    /// Number of nearest neighbors κ.
    #[arg(long)]
    pub kappa: Option<usize>,
    /// `uniform` or `boxed:m1:m2:r1:r2`.
    #[arg(long, default_value = "uniform")]
    pub kernel: String,
    /// `quantile:α`, `cte:α`, `pwm:p:q` or `cov`.
    #[arg(long)]
    pub functional: Option<String>,
    /// Output file; standard output when absent.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RatesArgs {
    /// Configuration file of `key = value` lines.
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    pub config: Option<PathBuf>,
    /// Shipped configuration name.
    #[arg(long)]
    pub preset: Option<String>,
    /// `key=value` overrides applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Output prefix; files `<prefix>.csv` and `<prefix>.json`.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Print the validated plan and exit without running or writing.
    #[arg(long)]
    pub dry_run: bool,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    /// Take H, L, M and k from a synthetic preset.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long = "holder", short = 'H', required_unless_present = "model")]
    pub h: Option<f64>,
    #[arg(long = "lipschitz", short = 'L', required_unless_present = "model")]
    pub l: Option<f64>,
    #[arg(long = "dispersion", short = 'M', required_unless_present = "model")]
    pub m: Option<f64>,
    #[arg(long = "dim", short = 'k', required_unless_present = "model")]
    pub k: Option<usize>,
    #[arg(long, value_enum)]
    pub scheme: SchemeName,
    /// Sample sizes: `a,b,c` or `base^lo..base^hi`.
    #[arg(long)]
    pub n_grid: String,
    /// Comma-separated bandwidths or neighbor counts, crossed with the n grid.
    #[arg(long, conflicts_with = "schedule")]
    pub values: Option<String>,
    /// `scale:exponent`, `const:value` or `optimal` (the default).
    #[arg(long)]
    pub schedule: Option<String>,
    /// Kernel constant c_k; defaults to k^{k/2}.
    #[arg(long)]
    pub c_k: Option<f64>,
    /// Nearest-neighbor constant c̃_k, required when k ≥ 2.
    #[arg(long)]
    pub tilde_ck: Option<f64>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StoneArgs {
    #[arg(long)]
    pub model: String,
    #[arg(long, value_enum)]
    pub scheme: SchemeName,
    #[arg(long, default_value = "uniform")]
    pub kernel: String,
    /// `scale:exponent`, `const:value` or `optimal`.
    #[arg(long, default_value = "optimal")]
    pub schedule: String,
    #[arg(long, default_value = "2^8..2^14")]
    pub n_grid: String,
    #[arg(long, default_value_t = 0.02)]
    pub eps: f64,
    #[arg(long, default_value_t = 40)]
    pub replications: usize,
    #[arg(long, default_value_t = 32)]
    pub test_points: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    /// Presets to check; all when absent.
    #[arg(long)]
    pub model: Vec<String>,
    /// Grid points per axis minus one.
    #[arg(long, default_value_t = 64)]
    pub resolution: usize,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match commands::dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub(crate) fn usage<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::usage(msg))
}

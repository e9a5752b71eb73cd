//! `missmass` command-line front-end.

mod commands;
mod formats;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Lib(#[from] missmass::Error),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("cannot access {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use missmass::Error as E;
        match self {
            CliError::Lib(E::InvalidInput(_)) | CliError::Parse(_) | CliError::Json(_) => 2,
            CliError::Lib(E::OutOfRegime(_) | E::Unsupported(_) | E::InsufficientSample { .. }) => 3,
            CliError::Lib(E::Internal(_)) => 1,
            CliError::Io { .. } => 4,
            CliError::Csv(e) if e.is_io_error() => 4,
            CliError::Csv(_) => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "missmass", version, about = "Estimate and bound the missing mass of a sample")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Good-Turing estimates, bias bound and deviation bounds from a sample file.
    Estimate(EstimateArgs),
    /// Tabulate one tail-bound family over an eps grid.
    Bounds(BoundsArgs),
    /// Maximize u_r(p, n, g) over p in (0,1).
    Ustar(UstarArgs),
    /// Seeded Monte Carlo runs: risk, tail frequencies or Dirichlet Bayes risk.
    Simulate(SimulateArgs),
    /// Write right-tail bound curves for n = 20, 100, 1000 as CSV files.
    Fig1(Fig1Args),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum InputFormat {
    /// Whitespace-separated tokens.
    Tokens,
    /// `token,count` rows.
    Counts,
    /// `l,phi_l` rows with an optional `n,<value>` row.
    Phi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Task {
    /// Squared-error risk per n (needs trials >= 100).
    Risk,
    /// Two-sided deviation frequencies against bounds (needs trials >= 1000).
    Tail,
    /// Bayes risk under the symmetric Dirichlet prior.
    Dirichlet,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Sample file.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "tokens")]
    pub format: InputFormat,
    /// Sample size for phi files; must equal sum of l * phi_l.
    #[arg(long)]
    pub n: Option<u64>,
    /// Order of the missing mass; the estimator needs an integer >= 1 and n >= alpha;
    /// the bias bound needs n > 2 alpha.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Deviation levels (a:b:step, list or @file); every eps >= 0. Right bounds
    /// need n >= 3; left bounds for alpha > 1 need n above the order threshold.
    #[arg(long)]
    pub eps: Option<String>,
    /// Clamp the reported estimate to [0, 1].
    #[arg(long)]
    pub clamp: bool,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    /// subgauss-unit, subgauss, subgamma, ssg, poly:R (R >= 1), left, left-closed,
    /// cor-left or cor-right. subgauss needs finite sup g(p)/p; subgamma, ssg and
    /// poly:R need n >= 3 and a Type A or B g; cor-* need a built-in g and n >= 3.
    #[arg(long)]
    pub family: String,
    /// Sample size, n >= 1 (n >= 3 for all families but subgauss-unit and subgauss).
    #[arg(long)]
    pub n: u64,
    /// power:ALPHA (alpha > 0) or entropy:K (K >= 2).
    #[arg(long, default_value = "power:1")]
    pub g: String,
    /// a:b:step (inclusive, step > 0), comma list or @file; every eps >= 0.
    #[arg(long)]
    pub eps_grid: String,
    #[arg(long, value_enum, default_value = "csv")]
    pub out: OutFormat,
    /// Output file instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct UstarArgs {
    /// Sample size, n >= 1.
    #[arg(long)]
    pub n: u64,
    /// power:ALPHA (alpha > 0) or entropy:K (K >= 2).
    #[arg(long, default_value = "power:1")]
    pub g: String,
    /// Order r >= 1.
    #[arg(long, default_value_t = 2)]
    pub r: u32,
    /// Requested relative tolerance, > 0.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Restrict p to the domain of g (p >= 1/K for entropy:K).
    #[arg(long)]
    pub floored: bool,
    /// Output file instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub task: Task,
    /// power:ALPHA (alpha > 0) or entropy:K (K >= 2); risk with the default
    /// estimator needs an integer power.
    #[arg(long, default_value = "power:1")]
    pub g: String,
    /// uniform:K, uniform:n, zipf:K:s, geometric:K:q, csv:PATH or json:PATH.
    /// Repeat for risk to report the largest risk over several distributions.
    #[arg(long, default_value = "uniform:n")]
    pub dist: Vec<String>,
    /// Comma-separated sample sizes; risk needs n >= alpha, tail needs n >= 1
    /// (bounds that need n >= 3 are omitted below it), dirichlet needs n >= 2.
    #[arg(long)]
    pub n_list: String,
    /// Monte Carlo trials: risk >= 100, tail >= 1000, dirichlet with --mc >= 2.
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// gt, ggt:ALPHA or plugin; defaults to the Good-Turing variant matching g.
    #[arg(long)]
    pub estimator: Option<String>,
    /// Dirichlet task: integer order alpha >= 1.
    #[arg(long, default_value_t = 1)]
    pub alpha: u32,
    /// Dirichlet task: support size k = round(c n) with c > 0.
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// Dirichlet task: add a Monte Carlo estimate with its standard error.
    #[arg(long)]
    pub mc: bool,
    /// Tail task eps grid (a:b:step, list or @file); every eps >= 0.
    #[arg(long, default_value = "0:0.7:0.05")]
    pub eps_grid: String,
    /// Worker threads; results do not depend on it. Defaults to available parallelism.
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, value_enum, default_value = "csv")]
    pub out: OutFormat,
    /// Output file instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Fig1Args {
    /// Output directory; defaults to $MISSMASS_OUT_DIR, then the current directory.
    #[arg(long)]
    pub outdir: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Estimate(a) => commands::estimate(&a),
        Command::Bounds(a) => commands::bounds(&a),
        Command::Ustar(a) => commands::ustar(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Fig1(a) => commands::fig1(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("missmass: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

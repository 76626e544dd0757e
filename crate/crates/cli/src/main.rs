//! `pcdm` command-line tool.

mod commands;
mod config;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pcdm::eso::EsoSource;
use pcdm::solver::Mode;
use std::path::PathBuf;
use std::process::ExitCode;
use thiserror::Error;

#[derive(Debug, Parser)]
#[command(name = "pcdm", version, about = "Parallel coordinate descent for composite problems")]
#[command(args_override_self = true)]
struct Cli {
    /// Flat `key = value` file with default flags; explicit flags win.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a sparse least-squares instance.
    Gen(GenArgs),
    /// Generate a sparse binary classification data set.
    GenSvm(GenSvmArgs),
    /// Run PCDM / PCDM-M and write a trace.
    Solve(SolveArgs),
    /// Print step weight statistics for several ESOs.
    Eso(EsoArgs),
    /// Print iteration complexity certificates and rate bounds.
    Bounds(BoundsArgs),
    /// Run the enumeration oracles on random small problems.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    n: usize,
    /// Maximum number of nonzeros per row.
    #[arg(long)]
    omega: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// LibSVM file; `b` is also written to `<out>.b.csv`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct GenSvmArgs {
    #[arg(long)]
    samples: usize,
    #[arg(long)]
    features: usize,
    /// Fraction of nonzero features per sample.
    #[arg(long, default_value_t = 0.05)]
    density: f64,
    /// Fraction of labels flipped.
    #[arg(long, default_value_t = 0.05)]
    flip: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProblemKind {
    Ls,
    Svm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SamplingKindArg {
    TauNice,
    Serial,
}

#[derive(Debug, Args)]
struct DataArgs {
    #[arg(long, value_enum)]
    problem: ProblemKind,
    #[arg(long)]
    data: PathBuf,
    /// Number of features (defaults to the largest index in the file).
    #[arg(long)]
    features: Option<usize>,
    /// SVM regularization parameter.
    #[arg(long, default_value_t = 1e-3)]
    lambda: f64,
    /// Scale SVM samples to unit norm.
    #[arg(long)]
    normalize: bool,
}

fn parse_eso(s: &str) -> Result<EsoSource, String> {
    EsoSource::from_tag(s).ok_or_else(|| format!("unknown ESO `{s}` (rt-p, rt-d, fr, du, nc, bkbg)"))
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    Mode::from_tag(s).ok_or_else(|| format!("unknown mode `{s}` (auto, pcdm, pcdm-m)"))
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    data: DataArgs,
    /// none, l1:LAMBDA, l2:MU, box or box:LO:HI (least squares only).
    #[arg(long, default_value = "none")]
    reg: String,
    #[arg(long, value_enum, default_value = "tau-nice")]
    sampling: SamplingKindArg,
    #[arg(long, default_value_t = 1)]
    tau: usize,
    #[arg(long, value_parser = parse_eso, default_value = "fr")]
    eso: EsoSource,
    #[arg(long, conflicts_with = "epochs")]
    iters: Option<u64>,
    /// Iterations as multiples of n/tau.
    #[arg(long)]
    epochs: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long, value_parser = parse_mode, default_value = "auto")]
    mode: Mode,
    #[arg(long, default_value_t = 1)]
    record_stride: u64,
    /// Accumulate updates atomically instead of in block order.
    #[arg(long)]
    nondeterministic: bool,
    /// PCDM-M accepts only steps that do not increase F.
    #[arg(long)]
    strict_monotone: bool,
    /// Record wall-clock time in the trace.
    #[arg(long)]
    time: bool,
    /// Known optimal value, reported in the summary.
    #[arg(long, conflicts_with = "reference")]
    f_star: Option<f64>,
    /// Compute a reference optimal value before solving.
    #[arg(long)]
    reference: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EsoArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 1)]
    tau: usize,
    /// Comma-separated ESO tags.
    #[arg(long, value_parser = parse_eso, value_delimiter = ',', default_value = "rt-p,rt-d,fr,nc,bkbg")]
    eso: Vec<EsoSource>,
    /// Write `v` histograms to `<PREFIX>.<eso>.csv`.
    #[arg(long, value_name = "PREFIX")]
    hist: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    buckets: usize,
}

#[derive(Debug, Args)]
struct BoundsArgs {
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    rho: f64,
    /// Squared distance from the start to the optimal set.
    #[arg(long)]
    dist0sq: f64,
    /// Initial optimality gap.
    #[arg(long)]
    xi0: f64,
    /// Squared levelset radius, when known.
    #[arg(long)]
    levelset_r2: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    mu_f: f64,
    #[arg(long, default_value_t = 0.0)]
    mu_psi: f64,
    /// Last k of the bound table.
    #[arg(long, default_value_t = 1000)]
    kmax: u64,
    #[arg(long, default_value_t = 100)]
    kstep: u64,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 50)]
    instances: usize,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 5)]
    points: usize,
}

#[derive(Debug, Error)]
pub enum Failure {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Abort(String),
    #[error("{0}")]
    Verify(String),
    #[error(transparent)]
    Other(#[from] anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Abort(_) => 3,
            Failure::Verify(_) => 4,
            Failure::Other(_) => 1,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let argv = match config::expand_args(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Gen(a) => commands::gen(&a),
        Command::GenSvm(a) => commands::gen_svm(&a),
        Command::Solve(a) => commands::solve(&a),
        Command::Eso(a) => commands::eso(&a),
        Command::Bounds(a) => commands::bounds(&a),
        Command::Verify(a) => commands::verify(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f:#}");
            ExitCode::from(f.code())
        }
    }
}

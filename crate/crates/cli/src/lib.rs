//! `wassfs` command line.
//!
//! Every subcommand is deterministic given its flags and seed. When `--out`
//! is set, `config.json` holding the effective arguments is written before
//! any computation starts, so partial runs are detectable and reruns can
//! reuse it through `--config`.
//!
//! Exit codes: 0 success, 1 property violation, 2 input error.

pub mod cmd;
pub mod error;
pub mod input;

use clap::{Parser, Subcommand};

pub use error::CliError;

/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "WASSFS_THREADS";

#[derive(Parser, Debug)]
#[command(name = "wassfs", version, about = "Feature selection by expected Wasserstein distance")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run backward elimination down to K features.
    Select(cmd::select::SelectArgs),
    /// Score a feature set by kNN top-k loss.
    Eval(cmd::eval::EvalArgs),
    /// Flip labels, select on noisy training data, evaluate on clean test data.
    NoiseSweep(cmd::sweep::SweepArgs),
    /// Check the noisy-label bounds on exhaustively enumerated joints.
    VerifyBounds(cmd::bounds::BoundsArgs),
    /// Transport cost between two distributions.
    Ot(cmd::ot::OtArgs),
    /// Validate a ground metric file.
    MetricCheck(cmd::metric::MetricArgs),
}

/// Sizes the global worker pool from [`THREADS_ENV`] when it is set.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| CliError::input(THREADS_ENV, format!("expected a positive integer, got `{raw}`")))?;
    // A pool that already exists (tests calling in twice) keeps its size.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Select(a) => cmd::select::run(&a),
        Command::Eval(a) => cmd::eval::run(&a),
        Command::NoiseSweep(a) => cmd::sweep::run(&a),
        Command::VerifyBounds(a) => cmd::bounds::run(&a),
        Command::Ot(a) => cmd::ot::run(&a),
        Command::MetricCheck(a) => cmd::metric::run(&a),
    }
}

//! `alle`: end-to-end pipeline runner for pressure-array relative-state
//! estimation.
//!
//! Exit codes: 0 success, 2 argument errors, 3 data or schema errors,
//! 4 numerical non-convergence.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use alle_core::error::Error;

#[derive(Parser)]
#[command(
    name = "alle",
    about = "Pressure-array relative-state estimation pipeline",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every command that consumes a sample set. `--in` accepts
/// either a sample-set CSV or a directory; a directory is searched for
/// `sample_set.csv` first and otherwise treated as a recording batch that is
/// smoothed and assembled on the fly.
#[derive(Args, Clone)]
struct InputArgs {
    /// Sample-set CSV, or a directory of recordings.
    #[arg(long = "in", value_name = "PATH")]
    input: PathBuf,
    /// Gaussian smoothing window (odd), applied when assembling recordings.
    #[arg(long, default_value_t = 25)]
    window: usize,
    /// Gaussian smoothing sigma; defaults to (window - 1) / 6.
    #[arg(long)]
    sigma: Option<f64>,
    /// Samples retained per recording when assembling.
    #[arg(long = "per-recording", default_value_t = 250)]
    per_recording: usize,
}

/// Model hyperparameter overrides; unset values use family defaults or the
/// per-state presets.
#[derive(Args, Clone)]
struct ModelArgs {
    /// Trees in a random forest.
    #[arg(long, default_value_t = 500)]
    trees: usize,
    /// Features per split (random forest); default round(M/3).
    #[arg(long = "m-try")]
    m_try: Option<usize>,
    /// Hidden nodes (network); default is the per-state preset.
    #[arg(long)]
    hidden: Option<usize>,
    /// Training iterations (network); default is the per-state preset.
    #[arg(long)]
    iterations: Option<usize>,
    /// SVR box constraint.
    #[arg(long = "svr-c", default_value_t = 1.0)]
    svr_c: f64,
    /// SVR tube half-width.
    #[arg(long = "svr-eps", default_value_t = 0.1)]
    svr_eps: f64,
    /// SVR RBF bandwidth; default 1/M on standardized features.
    #[arg(long = "svr-gamma")]
    svr_gamma: Option<f64>,
    /// SVR stopping tolerance.
    #[arg(long = "svr-tol", default_value_t = 1e-3)]
    svr_tol: f64,
    /// SVR optimization step cap.
    #[arg(long = "svr-max-iter", default_value_t = 200_000)]
    svr_max_iter: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic recordings plus their analytic ground truth.
    Generate {
        /// Generator configuration JSON.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Smooth a recording batch and assemble the labeled sample set.
    Preprocess {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sensor sensitivity criteria and orderings.
    Sensitivity {
        #[command(flatten)]
        input: InputArgs,
        /// Criterion whose ordering leads the report.
        #[arg(long, value_parser = ["c1", "c2"])]
        criterion: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit one model family on the full input set.
    Train {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_parser = ["rf", "bpnn", "svr", "reg"])]
        family: String,
        /// "all", a prefix length 1..=9, or comma-separated labels.
        #[arg(long, default_value = "all")]
        sensors: String,
        /// Criterion ordering used to resolve a numeric prefix.
        #[arg(long, default_value = "c2", value_parser = ["c1", "c2"])]
        ordering: String,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Permutation importance of a fitted forest on its training set.
    Importance {
        /// Model JSON written by `train`.
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Accuracy versus sensor count along a criterion ordering.
    Sweep {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_parser = ["rf", "bpnn", "svr", "reg"])]
        family: String,
        #[arg(long, value_parser = ["c1", "c2"])]
        ordering: String,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Seeded train/test split, fit, and held-out evaluation.
    Estimate {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_parser = ["rf", "bpnn", "svr", "reg"])]
        family: String,
        #[arg(long, default_value_t = 0.8)]
        fraction: f64,
        /// "all", a prefix length, or comma-separated labels.
        #[arg(long, default_value = "all")]
        sensors: String,
        #[arg(long, default_value = "c2", value_parser = ["c1", "c2"])]
        ordering: String,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Full family-by-ordering-by-M comparison grid.
    Compare {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = 0.8)]
        fraction: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
    },
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Argument(_) => 2,
        Error::Convergence { .. } | Error::DegenerateBootstrap { .. } => 4,
        _ => 3,
    }
}

/// Restore default SIGPIPE handling so `alle ... | head` terminates quietly
/// instead of panicking on a closed stdout.
fn reset_sigpipe() {
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
}

fn main() -> ExitCode {
    reset_sigpipe();
    // Honor the worker cap before any parallel region starts.
    if let Ok(threads) = std::env::var("ALLE_THREADS") {
        match threads.parse::<usize>() {
            Ok(n) if n >= 1 => {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                    .ok();
            }
            _ => {
                eprintln!("error: ALLE_THREADS must be a positive integer, got {threads:?}");
                return ExitCode::from(2);
            }
        }
    }

    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

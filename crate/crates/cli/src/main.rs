//! Command-line surface for the robustness library: one binary, one
//! subcommand per operation, a manifest JSON for every run, and exit codes
//! that distinguish input errors (2), exhausted solver budgets (3), and
//! numerical failures (4).

mod commands;
mod common;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "flipbound",
    version,
    about = "Certified label-flip robustness bounds for linear classifiers"
)]
struct Cli {
    /// Worker threads shared by per-target and per-block parallelism
    /// (default: all logical cores)
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Stderr log filter: error, warn, info, debug, or trace
    #[arg(long, global = true, default_value = "warn")]
    log_level: String,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Certified lower and upper robustness bounds per target
    Bounds(commands::BoundsArgs),
    /// Exact robustness of one target by branch and bound or enumeration
    Exact(commands::ExactArgs),
    /// Certified lower bound alone, from a disjoint-block partition
    Lower(commands::LowerArgs),
    /// Certified upper bound alone, from augmentation training
    Upper(commands::UpperArgs),
    /// Poisoning sweep: flip budgets against attack success and accuracy
    PoisonEval(commands::PoisonEvalArgs),
    /// Nearest-neighbor majority relabeling, with an optional bound comparison
    Sanitize(commands::SanitizeArgs),
    /// Dataset whose exact robustness equals a graph's minimum vertex cover
    GenVc(commands::GenVcArgs),
    /// Histogram of the bound values in a bounds report
    Hist(commands::HistArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(
        env_logger::Env::default().default_filter_or(&cli.log_level),
    )
    .init();

    let threads = cli.threads;
    if let Some(n) = threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(err) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: configuring the thread pool: {err}");
            return ExitCode::from(2);
        }
    }

    let outcome = match cli.command {
        Cmd::Bounds(args) => commands::cmd_bounds(threads, args),
        Cmd::Exact(args) => commands::cmd_exact(threads, args),
        Cmd::Lower(args) => commands::cmd_lower(threads, args),
        Cmd::Upper(args) => commands::cmd_upper(threads, args),
        Cmd::PoisonEval(args) => commands::cmd_poison_eval(threads, args),
        Cmd::Sanitize(args) => commands::cmd_sanitize(threads, args),
        Cmd::GenVc(args) => commands::cmd_gen_vc(threads, args),
        Cmd::Hist(args) => commands::cmd_hist(threads, args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

/// Input problems exit 2, internal numerical failures 4. Budget exhaustion
/// is not an error (the solvers return certified bounds); the exact command
/// maps it to exit 3 itself.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<flipbound::Error>() {
            return match e {
                flipbound::Error::Numerical(_) | flipbound::Error::Diverged { .. } => 4,
                _ => 2,
            };
        }
    }
    2
}

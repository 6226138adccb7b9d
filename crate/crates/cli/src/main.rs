use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use leakbound_cli::commands;
use leakbound_cli::config::{ExperimentConfig, Profile};
use leakbound_cli::error::{CliError, Result};

/// Information-theoretic evaluation of side-channel security: estimates
/// leakage mutual information, bounds the success rate of any attack, and
/// benchmarks the optimal maximum-likelihood attack against the bound.
#[derive(Parser)]
#[command(name = "leakbound", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment configuration file (`key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Cap the number of worker threads (results are thread-count
    /// invariant).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Monte-Carlo budget used when the config omits `n_draws`:
    /// desk = 1e5 draws, paper = 1e6.
    #[arg(long, global = true, value_enum, default_value = "desk")]
    profile: Profile,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate I(X;Y|T) and I(U;Y|T) over the trace grid.
    Mi,
    /// Turn MI curves into success-rate ceilings and q_min predictions.
    Bound,
    /// Run the maximum-likelihood attack and record its success rate.
    Attack,
    /// Track the estimate as the Monte-Carlo draw budget grows.
    Converge,
    /// Compare estimates against the exact small-parameter oracle.
    Oracle,
}

fn run(cli: &Cli) -> Result<()> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::config("--config <file> is required"))?;
    let cfg = ExperimentConfig::load(path)?;
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::config("--threads must be at least 1"));
        }
        // Ignore the error if a global pool already exists (tests).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match cli.command {
        Command::Mi => commands::cmd_mi(&cfg, cli.profile),
        Command::Bound => commands::cmd_bound(&cfg, cli.profile),
        Command::Attack => commands::cmd_attack(&cfg, cli.profile),
        Command::Converge => commands::cmd_converge(&cfg, cli.profile),
        Command::Oracle => commands::cmd_oracle(&cfg, cli.profile),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

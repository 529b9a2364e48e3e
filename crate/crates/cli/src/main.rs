//! `randamp`: command-line access to the polytope, adversary, distillation,
//! protocol and security tools.
//!
//! Primary output goes to stdout (or `--out`); diagnostics go to stderr.
//! Exit status is 0 on success, 1 on a domain error and 2 on a usage error.

mod commands;
mod output;
mod reproduce;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Domain(#[from] randamp::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Usage(String),
    #[error("{0} check(s) failed")]
    ChecksFailed(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Seed for every random choice (default 0).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Write the primary output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Parser)]
#[command(name = "randamp", version, about = "Randomness amplification toolkit")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate the Mermin functional on a box.
    MerminValue(commands::MerminValue),
    /// Print the GHZ correlation table.
    Ghz(commands::Ghz),
    /// Maximal predictability of a function of the outcomes.
    AdversaryBound(commands::AdversaryBound),
    /// Solve the two-stage LP for the distillation vectors.
    LemmaVectors(commands::LemmaVectors),
    /// Search for a distilling function on a finite domain.
    FindHash(commands::FindHash),
    /// Monte Carlo simulation of the protocol.
    Simulate(commands::Simulate),
    /// Evaluate the closed-form security bound.
    SecurityBound(commands::SecurityBound),
    /// Tabulate the security bound over a parameter grid.
    ParamSweep(commands::ParamSweep),
    /// Run the headline checks and print a pass/fail table.
    Reproduce(reproduce::Reproduce),
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("RANDAMP_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().map_err(|_| {
        CliError::Usage(format!(
            "RANDAMP_THREADS must be a positive integer, got {raw:?}"
        ))
    })?;
    if n == 0 {
        return Err(CliError::Usage("RANDAMP_THREADS must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    let g = &cli.global;
    match cli.command {
        Command::MerminValue(c) => c.run(g),
        Command::Ghz(c) => c.run(g),
        Command::AdversaryBound(c) => c.run(g),
        Command::LemmaVectors(c) => c.run(g),
        Command::FindHash(c) => c.run(g),
        Command::Simulate(c) => c.run(g),
        Command::SecurityBound(c) => c.run(g),
        Command::ParamSweep(c) => c.run(g),
        Command::Reproduce(c) => c.run(g),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

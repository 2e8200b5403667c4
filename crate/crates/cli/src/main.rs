#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde_json::json;

use commands::{ConfigError, Run};
use output::Format;

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

#[derive(Parser)]
#[command(
    name = "ptkit",
    version,
    about = "Non-Hermitian two-level dynamics, gauge analysis and Floquet sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate a state and write the trajectory.
    Simulate(Io),
    /// Sample Γ(t) and the effective Hamiltonian.
    Effective(Io),
    /// Compare a closed-form solution with numeric propagation.
    Analytic(Io),
    /// Sweep a parameter and classify Floquet phases.
    Floquet(Io),
    /// Sample exceptional-point coordinates.
    Ep(Io),
}

#[derive(Args)]
struct Io {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

fn load<T: DeserializeOwned>(path: &Path) -> Result<T, ConfigError> {
    let text =
        fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))
}

fn run(command: &Command) -> Result<Run, ConfigError> {
    match command {
        Command::Simulate(io) => commands::simulate(&load(&io.config)?),
        Command::Effective(io) => commands::effective(&load(&io.config)?),
        Command::Analytic(io) => commands::analytic(&load(&io.config)?),
        Command::Floquet(io) => commands::floquet(&load(&io.config)?),
        Command::Ep(io) => commands::ep(&load(&io.config)?),
    }
}

fn configure_threads() -> Result<(), ConfigError> {
    let Ok(value) = std::env::var("PTKIT_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| {
            ConfigError(format!(
                "PTKIT_THREADS must be a positive integer, got `{value}`"
            ))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| ConfigError(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let io = match &cli.command {
        Command::Simulate(io)
        | Command::Effective(io)
        | Command::Analytic(io)
        | Command::Floquet(io)
        | Command::Ep(io) => io,
    };
    let result = configure_threads().and_then(|_| run(&cli.command));
    let mut run = match result {
        Ok(run) => run,
        Err(ConfigError(msg)) => {
            eprintln!("ptkit: configuration error: {msg}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if run.failure.is_some() {
        run.meta.insert("truncated".into(), json!(true));
    }
    if let Some(msg) = &run.failure {
        run.meta.insert("error".into(), json!(msg));
    }
    let sentinels = match output::write(&io.out, io.format, &run.table, run.meta) {
        Ok(n) => n,
        Err(e) => {
            eprintln!("ptkit: cannot write {}: {e}", io.out.display());
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if let Some(msg) = &run.failure {
        eprintln!("ptkit: numeric failure: {msg}");
        return ExitCode::from(EXIT_NUMERIC);
    }
    if sentinels > 0 {
        eprintln!("ptkit: {sentinels} rows contained non-finite values");
        return ExitCode::from(EXIT_NUMERIC);
    }
    ExitCode::SUCCESS
}

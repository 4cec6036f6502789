//! `cns` — experiment harness for the stochastic chemotaxis-Navier-Stokes
//! simulator.
//!
//! Exit codes: 0 all gates pass, 1 gate failure, 2 config error,
//! 3 runtime fault. `CNS_OUTPUT_ROOT` prefixes every output directory.

mod checks;
mod commands;
mod config;
mod experiment;
mod presets;
mod reports;
mod seeds;

use clap::{Parser, Subcommand};
use config::ExperimentConfig;
use experiment::{EXIT_CONFIG_ERROR, EXIT_RUNTIME_FAULT};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "cns", about = "Stochastic chemotaxis-Navier-Stokes experiments", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run { config: PathBuf },
    /// Re-run the diagnostics of a stored ledger directory.
    Verify { ledger_dir: PathBuf },
    /// Resume a checkpointed trajectory under the given config.
    Resume {
        checkpoint: PathBuf,
        config: PathBuf,
    },
    /// Emit the noise hypothesis report for a config.
    Hypotheses { config: PathBuf },
}

fn load_config(path: &Path) -> Result<ExperimentConfig, i32> {
    ExperimentConfig::from_path(path).map_err(|err| {
        eprintln!("config error: {err:#}");
        EXIT_CONFIG_ERROR
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { config } => match load_config(&config) {
            Ok(cfg) => experiment::run_experiment(cfg).unwrap_or_else(runtime_fault),
            Err(code) => code,
        },
        Command::Verify { ledger_dir } => {
            commands::run_verify(&ledger_dir).unwrap_or_else(runtime_fault)
        }
        Command::Resume { checkpoint, config } => match load_config(&config) {
            Ok(cfg) => commands::run_resume(&checkpoint, cfg).unwrap_or_else(runtime_fault),
            Err(code) => code,
        },
        Command::Hypotheses { config } => match load_config(&config) {
            Ok(cfg) => commands::run_hypotheses(cfg).unwrap_or_else(runtime_fault),
            Err(code) => code,
        },
    };
    ExitCode::from(code as u8)
}

fn runtime_fault(err: anyhow::Error) -> i32 {
    eprintln!("runtime fault: {err:#}");
    EXIT_RUNTIME_FAULT
}

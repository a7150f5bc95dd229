//! `padr`: reaction-ultradiffusion runs on finite p-adic grids.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 failed
//! hypothesis/admissibility validation, 3 runtime abort (integration
//! blow-up, non-convergent solver). The `PADR_THREADS` environment variable
//! caps worker threads; outputs are byte-identical across thread counts.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "padr",
    about = "p-adic reaction-ultradiffusion: hierarchical operators, pattern solvers, convergence studies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check hypotheses and derived constants; print the validation report.
    Validate { config: PathBuf },
    /// Integrate the configured Cauchy problem and write trajectory files.
    Simulate { config: PathBuf },
    /// Solve for the patterned stationary state.
    Stationary { config: PathBuf },
    /// Eigenvalues of the operator (dense solve, small grids).
    Spectrum { config: PathBuf },
    /// Multi-resolution convergence study.
    Converge { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap's own exit codes collide with the hypothesis-failure code
            let _ = e.print();
            return ExitCode::from(1);
        }
    };

    if let Ok(threads) = std::env::var("PADR_THREADS") {
        match threads.parse::<usize>() {
            Ok(k) if k >= 1 => {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(k)
                    .build_global();
            }
            _ => {
                eprintln!("error: PADR_THREADS must be a positive integer, got {threads:?}");
                return ExitCode::from(1);
            }
        }
    }

    match run(&cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(classify(&err))
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<ExitCode> {
    match &cli.command {
        Command::Validate { config } => {
            let cfg = RunConfig::load(config)?;
            let passed = commands::cmd_validate(&cfg)?;
            Ok(if passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            })
        }
        Command::Simulate { config } => {
            let cfg = RunConfig::load(config)?;
            commands::cmd_simulate(&cfg)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Stationary { config } => {
            let cfg = RunConfig::load(config)?;
            commands::cmd_stationary(&cfg)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Spectrum { config } => {
            let cfg = RunConfig::load(config)?;
            commands::cmd_spectrum(&cfg)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Converge { config } => {
            let cfg = RunConfig::load(config)?;
            commands::cmd_converge(&cfg)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// Map failures onto the documented exit codes.
fn classify(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<padr_core::Error>() {
        Some(padr_core::Error::Hypothesis(_)) => 2,
        Some(padr_core::Error::Integration { .. }) | Some(padr_core::Error::Solver(_)) => 3,
        _ => 1,
    }
}

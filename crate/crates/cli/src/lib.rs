//! Scenario runner and verification harness for `phasequant`.
//!
//! A TOML scenario describes the grid, the window, the Hamiltonian and what
//! to run; subcommands turn it into CSV and JSON artifacts.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod scenario;
pub mod verify;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{execute, Command, Invocation, Outcome};
pub use config::Config;
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "phasequant", version, about = "Phase-space quantization scenarios: verify, evolve, spectrum, quantize, compare")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Scenario file (TOML).
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Output directory, created when missing.
    #[arg(long, value_name = "DIR", default_value = "phasequant-out")]
    pub out: PathBuf,
    /// Overrides the seed of the config.
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Run invariant suites and write verify.json.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Suite to run (repeatable): commutators, involutions, isometries,
        /// signs, energy, weak, or the aliases galileo and all.
        #[arg(long = "suite", value_name = "NAME")]
        suites: Vec<String>,
    },
    /// Propagate the initial state and write evolution.csv and summary.json.
    Evolve(Common),
    /// Diagonalize the dense Hamiltonian and write spectrum.csv/json.
    Spectrum(Common),
    /// Write a quantized operator as operator.json plus matrix data.
    Quantize(Common),
    /// Run quantum and classical evolutions side by side.
    Compare(Common),
}

impl Cli {
    pub fn invocation(self) -> Invocation {
        let (command, common, suites) = match self.command {
            CliCommand::Verify { common, suites } => (Command::Verify, common, suites),
            CliCommand::Evolve(c) => (Command::Evolve, c, vec![]),
            CliCommand::Spectrum(c) => (Command::Spectrum, c, vec![]),
            CliCommand::Quantize(c) => (Command::Quantize, c, vec![]),
            CliCommand::Compare(c) => (Command::Compare, c, vec![]),
        };
        Invocation { command, config: common.config, out: common.out, suites, seed: common.seed }
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    match execute(&cli.invocation()) {
        Ok(o) => {
            if !o.message.is_empty() {
                println!("{}", o.message);
            }
            if o.success {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

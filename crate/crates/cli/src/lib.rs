//! Batch front-end for the `uuv-geoloc` library.

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use thiserror::Error;

pub mod commands;
pub mod config;
pub mod formats;

pub use commands::{cmd_evaluate, cmd_recover, cmd_simulate};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(String),
    #[error("config error: {0}")]
    Config(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Config(_) => 2,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "uuv-geoloc", version, about = "Underwater vehicle geolocation from aerial pixel tracks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Recover 3D and geodetic positions from an observation log.
    Recover {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Compare a recovered trajectory against ground truth.
    Evaluate {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Trajectory CSV written by `recover`.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        /// Report path; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Generate synthetic observation and ground-truth logs.
    Simulate {
        /// Scenario file.
        #[arg(long)]
        config: PathBuf,
        /// Observation CSV to write.
        #[arg(long)]
        output: PathBuf,
        /// Ground-truth CSV to write.
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Recover { config, input, output } => {
            let out = cmd_recover(&config, &input, &output)?;
            eprintln!("recovered {} rows, excluded {}", out.samples.len(), out.excluded.len());
        }
        Command::Evaluate {
            config,
            input,
            gt,
            output,
        } => {
            cmd_evaluate(config.as_deref(), &input, &gt, output.as_deref())?;
        }
        Command::Simulate { config, output, gt, seed } => {
            let n = cmd_simulate(&config, &output, &gt, seed)?;
            eprintln!("wrote {n} samples");
        }
    }
    Ok(())
}

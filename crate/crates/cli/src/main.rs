//! Command-line front end for the hyperentangled GHZ analyzer.
//!
//! Subcommands:
//! - `analyze` — prepare one labeled state, run both analysis steps once,
//!   print the measurement record and the classified label.
//! - `verify` — run the exhaustive verification stages and report.
//! - `tables` — regenerate the atom-readout and detector-group tables from
//!   simulation (checked verbatim against the built-in transcription for
//!   three photons).
//! - `search-tesa` — enumerate element-level transduction configurations
//!   until one reproduces the published step-2 outputs.
//!
//! Exit codes: 0 pass, 1 verification failure, 2 usage or parse error,
//! 3 internal error.

mod circuit_text;
mod commands;
mod report;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "hyperghz", version, about = "Two-step hyperentangled GHZ state analyzer: simulation and exhaustive verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Number of entangled photons.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u8).range(2..=6))]
    photons: u8,

    /// Base seed for all random streams.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Report format.
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,

    /// Write the report to a file instead of stdout.
    #[arg(long)]
    out: Option<std::path::PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run both analysis steps once on a labeled input state.
    Analyze {
        #[command(flatten)]
        common: CommonArgs,
        /// Input label, e.g. P+001,T-010 (leading bit of each factor is 0).
        #[arg(long)]
        state: String,
    },
    /// Exhaustively verify the analyzer: atom table, transduction contract,
    /// derived discrimination tables, and the closed classification loop.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        /// Shots per input state in the closed-loop check.
        #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u32).range(1..))]
        shots: u32,
    },
    /// Regenerate the atom-readout and detector-group tables.
    Tables {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Search for an element-level transduction configuration.
    SearchTesa {
        #[command(flatten)]
        common: CommonArgs,
        /// Circuit description file seeding the search space.
        #[arg(long)]
        circuit: Option<std::path::PathBuf>,
        /// Upper bound on evaluated candidates.
        #[arg(long, default_value_t = 100_000)]
        max_candidates: usize,
    },
}

/// Failures routed to dedicated exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Exit 2: bad flags, malformed labels, unparsable files.
    Usage(String),
    /// Exit 3: simulation errors that indicate a bug or unsupported input.
    Internal(String),
}

impl From<hyperghz::Error> for CliError {
    fn from(e: hyperghz::Error) -> Self {
        CliError::Internal(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(format!("io error: {e}"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze { common, state } => commands::analyze(&common, &state),
        Command::Verify { common, shots } => commands::verify(&common, shots),
        Command::Tables { common } => commands::tables(&common),
        Command::SearchTesa { common, circuit, max_candidates } => {
            commands::search_tesa(&common, circuit.as_deref(), max_candidates)
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(3)
        }
    }
}

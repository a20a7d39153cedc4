//! `isoquant`: evaluate, sweep, extrapolate, symmetrize and optimize
//! isoperimetric quotients from the command line.

mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

use config::Flags;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Numeric(#[from] isoquant::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "isoquant", version, about)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Area, perimeter, deficit, asymmetry and quotient of one shape.
    Eval(Flags),
    /// `eval` over a grid of the family parameter, one CSV row per value.
    Sweep(Flags),
    /// Extrapolate the quotient along ovals to the ball.
    FitCoeffs(Flags),
    /// Annular symmetrization of an oval or P(k) set.
    Symmetrize(Flags),
    /// Minimize the quotient over a family or a free boundary.
    Search(Flags),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::Eval(f) => commands::eval(f),
        Command::Sweep(f) => commands::sweep(f),
        Command::FitCoeffs(f) => commands::fit_coeffs(f),
        Command::Symmetrize(f) => commands::symmetrize(f),
        Command::Search(f) => commands::search(f),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

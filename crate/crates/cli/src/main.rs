//! `rhognf`: simulate benchmark data, fit flows, sweep `rho` and compute bounds.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 data error,
//! 4 numerical failure.

mod args;
mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::Parser;

use crate::args::Cli;

/// A failure classified by the exit code it maps to.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Numerical(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Numerical(m) => m,
        }
    }
}

impl From<rhognf::Error> for CliError {
    fn from(e: rhognf::Error) -> Self {
        use rhognf::Error as E;
        let msg = e.to_string();
        let mut root = &e;
        while let E::SweepPoint { source, .. } = root {
            root = source;
        }
        match root {
            E::InvalidParameter(_) | E::DegenerateCopula(_) => CliError::Usage(msg),
            E::InversionFailure { .. } | E::Diverged { .. } => CliError::Numerical(msg),
            _ => CliError::Data(msg),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

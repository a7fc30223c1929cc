//! Command-line front end for the Kodaira-Thurston Calabi-Yau solver.
//!
//! `solve` runs the continuity method, `verify` runs property suites against
//! a solved instance, `sweep` repeats a solve across grid sizes. Every
//! subcommand writes `report.json` into its output directory.

pub mod args;
pub mod commands;
pub mod config;
pub mod report;

use thiserror::Error;

pub use args::{run, Cli};

/// Process exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    /// Malformed input, or an internal error such as a non-finite report.
    Invalid = 1,
    /// The continuity path stalled; a partial report was written.
    Stalled = 2,
    /// A verification check failed.
    CheckFailed = 3,
}

impl ExitStatus {
    pub fn code(self) -> u8 {
        self as u8
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("internal error: {0}")]
    Internal(String),
    #[error(transparent)]
    Solver(#[from] ktcy_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

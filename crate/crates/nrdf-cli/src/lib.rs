//! Command-line front end: JSON config ingestion, subcommand dispatch, and
//! machine-readable JSON/CSV emission over the core library.

// Parameter guards are written `!(x > 0.0)` so NaN is rejected along with
// nonpositives; `x <= 0.0` would let NaN through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod output;
pub mod run;

use thiserror::Error;

/// Front-end failures, each carrying its process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Numerical or validation failure from the core library.
    #[error(transparent)]
    Core(#[from] nrdf_core::Error),
    /// Unreadable, unparsable, or inconsistent configuration.
    #[error("{0}")]
    Config(String),
    /// Results could not be written.
    #[error("cannot write output: {0}")]
    Write(std::io::Error),
}

impl CliError {
    /// 2 when the solver ran out of iterations, 3 for any invalid input,
    /// 1 for unexpected I/O failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(nrdf_core::Error::NoConvergence { .. }) => 2,
            CliError::Core(_) | CliError::Config(_) => 3,
            CliError::Write(_) => 1,
        }
    }
}

//! Command-line front end for the fel1d simulator.
//!
//! The binary exposes five subcommands over one shared configuration format:
//! `simulate` (N-body run), `predict` (short-time closed forms on the same
//! grid), `dispersion` (linear dispersion roots), `contour` (waterbag
//! boundary tracking), and `compare` (tolerance-gated report of a simulation
//! CSV against a prediction CSV).
//!
//! Everything the binary does is reachable through this library so tests can
//! drive the exact production code paths: [`run::Cli`] is the clap surface,
//! [`run::execute`] the dispatcher.
//!
//! Exit codes: 0 success, 1 validation or usage error, 2 numerical abort
//! (conservation violation or non-finite state), 3 comparison FAIL.

#![warn(missing_docs)]
// Validation guards are written `!(x > 0.0)` on purpose: the negation
// rejects NaN, which the suggested `x <= 0.0` would wave through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod csvio;
pub mod run;
pub mod svg;

use std::io;

/// Everything that can stop a subcommand, mapped onto the exit-code contract.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad configuration, arguments, or input files. Exit 1.
    #[error("{0}")]
    Usage(String),
    /// Filesystem failure. Exit 1.
    #[error("{0}")]
    Io(#[from] io::Error),
    /// A run aborted mid-flight (conservation violation, non-finite state,
    /// degenerate fit). Exit 2.
    #[error("{0}")]
    Numerical(String),
    /// The comparison gate did not pass. Exit 3.
    #[error("comparison gate failed")]
    CompareFailed,
}

impl CliError {
    /// Process exit code for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::CompareFailed => 3,
        }
    }
}

/// Splits integrator failures into validation errors (exit 1) and genuine
/// numerical aborts (exit 2).
pub fn map_run_error(e: fel1d_core::nbody::RunError) -> CliError {
    use fel1d_core::nbody::RunError;
    match e {
        RunError::Spec(_) | RunError::Config(_) => CliError::Usage(e.to_string()),
        other => CliError::Numerical(other.to_string()),
    }
}

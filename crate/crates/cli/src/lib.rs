//! Experiment driver for the torus proximal-flow laboratory.
//!
//! One process invocation runs one experiment. Every command is configured by
//! a single JSON document (archived next to its outputs) so that a run can be
//! reproduced byte for byte from its artifact directory; command-line flags
//! only select the subcommand, the document path, and verbosity.
//!
//! Outcomes map onto a fixed exit-code scale:
//!
//! | code | meaning                                   |
//! |------|-------------------------------------------|
//! | 0    | every requested check passed              |
//! | 1    | at least one check failed                 |
//! | 2    | usage, configuration, or input-file error |
//! | 3    | runtime failure while computing artifacts |

pub mod checks;
pub mod commands;
pub mod config;
pub mod selftest;

use std::fmt;

use thiserror::Error;

/// Exit code when every requested check passes.
pub const EXIT_PASS: i32 = 0;
/// Exit code when the run finishes but a check is violated.
pub const EXIT_CHECK_FAILED: i32 = 1;
/// Exit code for bad invocations, malformed configuration, or unreadable
/// input documents.
pub const EXIT_USAGE: i32 = 2;
/// Exit code for failures while computing or writing artifacts.
pub const EXIT_RUNTIME: i32 = 3;

/// Failure modes of a command, split by the exit code they map to. A check
/// that merely *fails* is not an error: commands report that through their
/// boolean outcome.
#[derive(Debug, Error)]
pub enum CliError {
    /// The invocation or a configuration/input document is invalid (exit 2).
    #[error("{0}")]
    Config(String),
    /// Computation or artifact writing failed after a valid start (exit 3).
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    /// The process exit code this error maps to.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_USAGE,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Wraps a lower-level failure as a configuration error (exit 2).
pub(crate) fn config_err<E: fmt::Display>(e: E) -> CliError {
    CliError::Config(e.to_string())
}

/// Wraps a lower-level failure as a runtime error (exit 3).
pub(crate) fn runtime_err<E: fmt::Display>(e: E) -> CliError {
    CliError::Runtime(e.to_string())
}

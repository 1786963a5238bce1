//! Experiment driver behind the `irsec` binary: configuration handling,
//! scenario generation, solver orchestration, artifact writing, and the
//! post-hoc verification pass.
//!
//! The binary in `main.rs` only parses arguments and maps errors to exit
//! codes; everything observable lives here so integration tests can drive
//! the same paths directly.

use std::path::PathBuf;

use thiserror::Error;

pub mod artifacts;
pub mod config;
pub mod run;
pub mod verify;

/// Driver failure, tagged with the process exit code it maps to.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration or malformed input file. Exit code 1.
    #[error("{0}")]
    Validation(String),
    /// A solver or numeric kernel failed. Exit code 2.
    #[error("{0}")]
    Solver(String),
    /// Filesystem trouble. Exit code 3.
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Solver(_) => 2,
            CliError::Io { .. } => 3,
        }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}

impl From<irsec::model::SolveError> for CliError {
    fn from(e: irsec::model::SolveError) -> Self {
        CliError::Solver(e.to_string())
    }
}

impl From<irsec::optkit::KernelError> for CliError {
    fn from(e: irsec::optkit::KernelError) -> Self {
        CliError::Solver(e.to_string())
    }
}

impl From<irsec::chansim::SimError> for CliError {
    fn from(e: irsec::chansim::SimError) -> Self {
        match e {
            irsec::chansim::SimError::Invalid(msg) => CliError::Validation(msg),
            other => CliError::Solver(other.to_string()),
        }
    }
}

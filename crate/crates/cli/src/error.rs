use std::path::PathBuf;
use std::process::ExitCode;

use netclear_core::{ClearingError, FormatError, GraphError, ModelError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Clearing(#[from] ClearingError),
    #[error("cannot write {}: {source}", path.display())]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Clearing(ClearingError::Model(e))
    }
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        CliError::Clearing(ClearingError::Graph(e))
    }
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        let code = match self {
            CliError::Format(_) | CliError::Usage(_) => 2,
            CliError::Clearing(ClearingError::Model(_) | ClearingError::Graph(_)) => 2,
            CliError::Clearing(_) => 3,
            CliError::Write { .. } => 1,
        };
        ExitCode::from(code)
    }
}

/// Outcome of a command that ran to completion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    CertificationFailed,
}

impl Outcome {
    pub fn from_certified(certified: bool) -> Self {
        if certified {
            Outcome::Ok
        } else {
            Outcome::CertificationFailed
        }
    }

    pub fn exit_code(self) -> ExitCode {
        match self {
            Outcome::Ok => ExitCode::SUCCESS,
            Outcome::CertificationFailed => ExitCode::from(4),
        }
    }
}

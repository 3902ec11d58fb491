use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Core(#[from] stagebot_core::Error),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error in {what}: {source}")]
    Csv {
        what: String,
        #[source]
        source: csv::Error,
    },

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error("invalid trace {what}: {message}")]
    Trace { what: String, message: String },

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("validation failed: {0} problem(s)")]
    Validation(usize),
}

pub type SimResult<T> = Result<T, SimError>;

impl SimError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SimError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 1 for bad inputs, 2 for faults while running.
    pub fn exit_code(&self) -> i32 {
        use stagebot_core::Error as E;
        match self {
            SimError::Core(E::Io { .. }) | SimError::Io { .. } | SimError::Csv { .. } | SimError::Protocol(_) => 2,
            SimError::Core(_) | SimError::Scenario(_) | SimError::Trace { .. } | SimError::Validation(_) => 1,
        }
    }
}

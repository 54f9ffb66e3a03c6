//! Experiment harness for the `rcdyn` crate: configuration, reports,
//! the experiments themselves and the `rclab` command line.

pub mod config;
pub mod experiments;
pub mod report;
pub mod cli;
pub mod stats;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("parameter: {0}")]
    Parameter(String),
    #[error("runtime cap reached: {0}")]
    Cap(String),
    #[error(transparent)]
    Core(#[from] rcdyn::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl LabError {
    /// Process exit code: 1 usage, 2 parameter, 3 runtime cap.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Usage(_) => 1,
            LabError::Cap(_) => 3,
            LabError::Core(rcdyn::Error::Usage(_)) => 1,
            LabError::Core(rcdyn::Error::Size { .. }) => 3,
            LabError::Core(rcdyn::Error::RetryExhausted { .. }) => 3,
            LabError::Core(_) | LabError::Parameter(_) | LabError::Io(_) | LabError::Json(_) => 2,
        }
    }
}

pub type LabResult<T> = Result<T, LabError>;

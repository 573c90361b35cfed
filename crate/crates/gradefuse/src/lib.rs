//! File formats, configuration, parallel screening and report rendering for
//! [`gradefuse_core`].

pub mod config;
pub mod io;
pub mod parallel;
pub mod report;

use gradefuse_core::simulator::SimError;
use gradefuse_core::{ModelError, PipelineError, Violation};

pub use parallel::Parallel;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("table failed validation with {} violation(s)", .0.len())]
    Validation(Vec<Violation>),
    #[error(transparent)]
    Pipeline(PipelineError),
    #[error("config {0}")]
    Config(String),
    #[error("simulation: {0}")]
    Sim(#[from] SimError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl From<PipelineError> for Error {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Invalid(v) => Error::Validation(v),
            PipelineError::Config(m) => Error::Config(m),
            other => Error::Pipeline(other),
        }
    }
}

impl Error {
    /// 1 for validation failures, 2 for unreadable or malformed input and
    /// settings, 3 for degenerate statistics.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) => 1,
            Error::Pipeline(e) if e.is_degenerate() => 3,
            _ => 2,
        }
    }
}

//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by distribution validation, model evaluation, training,
/// and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    /// A distribution spec failed validation (non-PD covariance, bad weights, ...).
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    /// An input vector does not match the expected dimensionality.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A scalar or structural argument violated a precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An operation that requires data received none.
    #[error("empty input: {0}")]
    EmptyInput(String),

    /// Experiment configuration is inconsistent or references a missing preset.
    #[error("config error: {0}")]
    Config(String),

    #[error("unknown preset '{0}'")]
    UnknownPreset(String),

    /// A pipeline stage failed; the stage name is preserved for the harness.
    #[error("stage '{stage}' failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Wrap an error with the harness stage it occurred in.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

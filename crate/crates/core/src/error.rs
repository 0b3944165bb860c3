use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("division by zero: {0}")]
    DivisionByZero(&'static str),

    #[error("non-finite value in {0}")]
    NumericDomain(&'static str),

    #[error("integration failed after {steps} steps at t = {reached_time}")]
    IntegrationFailure { reached_time: f64, steps: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("training diverged at epoch {epoch}")]
    TrainingDiverged { epoch: usize },

    #[error("imbalance ratio undefined: no oscillatory samples")]
    UndefinedImbalanceRatio,

    #[error("gini index undefined: all labels are zero")]
    UndefinedGini,

    #[error("labeling failures in cycle {cycle}: {failures} of {batch} samples")]
    LabelingFailures {
        cycle: usize,
        failures: usize,
        batch: usize,
    },

    #[error("unknown system `{0}`")]
    UnknownSystem(String),

    #[error("malformed file {path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

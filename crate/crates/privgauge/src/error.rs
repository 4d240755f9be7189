//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by corpus generation, training, accounting, and reporting.
#[derive(Error, Debug)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("size mismatch: expected {expected}, got {actual} ({context})")]
    SizeMismatch {
        expected: usize,
        actual: usize,
        context: &'static str,
    },

    #[error("sequence of {0} token(s) is too short to score (need at least 2)")]
    SequenceTooShort(usize),

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("corpus error: {0}")]
    Corpus(String),

    #[error("loss samples contain no {0}")]
    MissingClass(&'static str),

    #[error("artifact error: {0}")]
    Artifact(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

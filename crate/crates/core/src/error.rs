use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the augmentation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("wav error: {0}")]
    Wav(#[from] hound::Error),

    /// The file is a valid WAV but not something we process (multichannel, 24-bit, ...).
    #[error("unsupported audio format: {0}")]
    Format(String),

    /// An argument fell outside the domain of a formula (log of zero, HL >= theta, ...).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: String, got: String },

    #[error("linear solve failed (condition estimate {condition:.3e}): {reason}")]
    Solver { condition: f64, reason: String },

    #[error("json error: {0}")]
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

pub type Result<T> = std::result::Result<T, Error>;

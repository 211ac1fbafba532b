use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("log `{log_id}` has {rows} rows; at least 2 are required")]
    EmptyLog { log_id: String, rows: usize },

    #[error("no channel reaches the coverage threshold {threshold}")]
    NoChannelsRetained { threshold: f64 },

    #[error("channel mismatch: expected {expected:?}, found {found:?}")]
    ChannelMismatch { expected: Vec<String>, found: Vec<String> },

    #[error("log `{log_id}` has {len} samples, shorter than the window length {window}")]
    LogTooShort { log_id: String, len: usize, window: usize },

    #[error("non-finite input value at position {index}")]
    NonFiniteInput { index: usize },

    #[error("metric requires both classes; got {positives} positives and {negatives} negatives")]
    SingleClass { positives: usize, negatives: usize },

    #[error("leave-log-out needs at least 3 logs, got {0}")]
    TooFewLogs(usize),

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    #[error("length mismatch: {what} has {got} entries, expected {expected}")]
    LengthMismatch { what: &'static str, got: usize, expected: usize },

    #[error("malformed file {path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format { path: path.into(), message: message.into() }
    }
}

use thiserror::Error;

pub type Result<T, E = GbdtError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum GbdtError {
    #[error("{split} labels need both classes; got {positives} positives and {negatives} negatives")]
    DegenerateLabels { split: &'static str, positives: usize, negatives: usize },

    #[error("non-finite feature value at row {row}, column {column}")]
    NonFiniteFeature { row: usize, column: usize },

    #[error("feature width mismatch: model expects {expected} columns, got {got}")]
    WidthMismatch { expected: usize, got: usize },

    #[error("{what} has {got} entries, expected {expected}")]
    LengthMismatch { what: &'static str, got: usize, expected: usize },

    #[error("model has no splits, so gain shares are undefined")]
    NoSplits,

    #[error("invalid boosting configuration: {0}")]
    InvalidConfig(String),

    #[error("unsupported model schema version {0}")]
    SchemaVersion(u32),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

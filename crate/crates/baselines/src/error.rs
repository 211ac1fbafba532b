use thiserror::Error;

pub type Result<T, E = BaselineError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("degenerate training data: {0}")]
    DegenerateData(String),

    #[error("{split} labels need both classes; got {positives} positives and {negatives} negatives")]
    DegenerateLabels { split: &'static str, positives: usize, negatives: usize },

    #[error("feature width mismatch: model expects {expected} columns, got {got}")]
    WidthMismatch { expected: usize, got: usize },

    #[error("non-finite feature value at row {row}, column {column}")]
    NonFiniteFeature { row: usize, column: usize },

    #[error("{what} has {got} entries, expected {expected}")]
    LengthMismatch { what: &'static str, got: usize, expected: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn check_finite(x: &ndarray::ArrayView2<'_, f64>) -> Result<()> {
    for ((row, column), v) in x.indexed_iter() {
        if !v.is_finite() {
            return Err(BaselineError::NonFiniteFeature { row, column });
        }
    }
    Ok(())
}

pub(crate) fn check_width(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(BaselineError::WidthMismatch { expected, got });
    }
    Ok(())
}

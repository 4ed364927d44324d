//! Shared error type for the forecasting library.

use thiserror::Error;

/// Library-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input file does not match the expected layout.
    #[error("format error: {0}")]
    Format(String),

    /// A single data row could not be parsed; carries the source line.
    #[error("row {line}: {message}")]
    Row { line: u64, message: String },

    /// Series is too short (or too sparse) to be usable.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("duplicate key: {0}")]
    DuplicateKey(String),

    #[error("validation error: {0}")]
    Validation(String),

    /// Exogenous series could not be aligned to the temperature series.
    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("series too short: {0}")]
    TooShort(String),

    /// Min-max scaling is undefined on a constant series.
    #[error("degenerate scale: all values identical")]
    DegenerateScale,

    /// Design matrix is rank deficient.
    #[error("singular design matrix")]
    SingularDesign,

    /// The simplex optimizer exhausted its budget; carries the best fit
    /// found so far.
    #[error("optimizer did not converge after {iterations} iterations")]
    NonConvergence {
        iterations: usize,
        best: Box<crate::arima::ArimaFit>,
    },

    /// Training loss became non-finite.
    #[error("training diverged at epoch {epoch}")]
    Divergence { epoch: usize },

    /// A forward pass produced a non-finite intermediate.
    #[error("non-finite value at step {step}: {context}")]
    Numeric { step: usize, context: String },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// Every candidate specification in a grid search failed.
    #[error("all {} candidate specs failed; first failure: {}", .reasons.len(), .reasons.first().map(String::as_str).unwrap_or("none"))]
    AllCandidatesFailed { reasons: Vec<String> },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

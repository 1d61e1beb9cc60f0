//! Error type shared across the crate.
//!
//! Two broad classes matter to callers: *usage* problems (bad arguments,
//! malformed files) and *numeric/domain* problems (inputs outside the validity
//! region of a formula, convergence failures). The CLI maps the whole enum to
//! exit code 2; argument-parsing failures never reach this type.

use thiserror::Error;

/// Crate-wide error enum.
#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the mathematical domain of an operation
    /// (e.g. a data singular value below the bulk edge).
    #[error("domain error: {0}")]
    Domain(String),

    /// Structurally invalid input (shape mismatch, empty data, bad config).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The iterative SVD did not converge within its bounded iteration count.
    #[error("SVD failed to converge for a {rows}x{cols} matrix")]
    SvdFailure { rows: usize, cols: usize },

    /// No shrinkage threshold exists in the search bracket for this loss.
    #[error("no crossing point in ({lo}, {hi}] for loss '{loss}': the zero shrinker never becomes suboptimal")]
    NoCrossing { loss: String, lo: f64, hi: f64 },

    /// Failure reading or writing a file.
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed numeric text (CSV cells, list arguments).
    #[error("parse error: {0}")]
    Parse(String),

    /// JSON (de)serialization failure.
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

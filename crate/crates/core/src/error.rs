use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Incompatible dimensions between operands.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Cholesky factorization failed even after jitter escalation. Carries the
    /// 1-based index of the first non-positive leading principal minor.
    #[error("matrix not positive definite: leading minor of order {minor} is not positive (jitter tried up to {max_jitter:.3e})")]
    NotPositiveDefinite { minor: usize, max_jitter: f64 },

    /// Invalid input data (dataset validation, out-of-range values, bad config).
    #[error("invalid input: {0}")]
    Invalid(String),

    /// A numeric routine could not produce a meaningful result.
    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

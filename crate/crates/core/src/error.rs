use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid tree: {0}")]
    InvalidTree(String),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("truncation depth {depth} too small: {reason}")]
    DepthTooSmall { depth: usize, reason: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("near-singular Gram matrix: smallest eigenvalue {0:e}")]
    NearSingular(f64),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("inputs are not unitarily equivalent: {0}")]
    NotEquivalent(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

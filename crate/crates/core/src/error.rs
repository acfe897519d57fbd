use thiserror::Error;

/// Errors raised by the factorization, geometry and certification routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },

    #[error("index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("invalid level: {0}")]
    InvalidLevel(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("exact support oracle limited to r ≤ 12")]
    SupportOracleLimit,

    #[error("exact certification limited to r ≤ 3")]
    ExactCertificationLimit,

    #[error("not SSC-scattered at any tested level")]
    NotScattered,

    #[error("Theorem 1 envelope degenerate at p² ≥ r−1")]
    DegenerateEnvelope,

    #[error("recover_h requires full-rank W")]
    RankDeficient,

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("instance invariant violated: {0}")]
    Invariant(String),

    #[error("need at least {needed} usable points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("malformed file {path}: {reason}")]
    Malformed { path: String, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

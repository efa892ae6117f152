use thiserror::Error;

/// Error type shared across the toolkit.
#[derive(Debug, Error)]
pub enum QacoError {
    /// Invalid configuration supplied before any run started.
    #[error("configuration error: {0}")]
    Config(String),

    /// API misuse: bad index, wrong length, non-permutation input.
    #[error("usage error: {0}")]
    Usage(String),

    /// TSPLIB text could not be parsed.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Instance exceeds the qubit budget and must be decomposed first.
    #[error("instance with {cities} cities exceeds the {cap}-city sub-problem cap; decompose it first")]
    DecompositionRequired { cities: usize, cap: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, QacoError>;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("permutation {0} is reducible")]
    Reducible(String),

    #[error("parse error at position {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("point {0} lies outside the domain [0, 1)")]
    Domain(f64),

    #[error("invalid interval lengths: {0}")]
    InvalidLengths(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("window [{from}, {to}) does not cover the requested range")]
    Window { from: i64, to: i64 },

    #[error("precondition failed: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;

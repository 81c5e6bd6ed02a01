//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration values (channel parameters, fading config, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// Invalid arguments to an operation (length mismatches, bad indices).
    #[error("argument error: {0}")]
    Argument(String),

    /// A state sequence does not contain enough information to estimate
    /// transition probabilities.
    #[error("estimation error: {0}")]
    Estimation(String),

    /// An encoded payload cannot be decoded back to a state sequence.
    #[error("malformed code: {0}")]
    MalformedCode(String),

    /// The request exceeds a configured capacity cap.
    #[error("capacity error: {0}")]
    Capacity(String),

    /// Input outside the mathematical domain of an expression.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

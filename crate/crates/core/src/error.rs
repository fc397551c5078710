//! Error type shared across the crate.

use thiserror::Error;

/// Errors raised by design construction, inference and report assembly.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument was outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// One or more structural validation failures, reported together.
    #[error("validation failed:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),

    /// An iterative computation failed to converge or lost its bracket.
    #[error("computation failed: {0}")]
    Computation(String),

    /// A spec document could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn computation(msg: impl Into<String>) -> Self {
        Error::Computation(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

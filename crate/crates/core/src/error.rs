use thiserror::Error;

/// Errors raised by the chain analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid potential family: {0}")]
    InvalidFamily(String),

    #[error("strain {z} is outside the domain (0, +inf)")]
    Domain { z: f64 },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("bracket search failed: {0}")]
    Bracket(String),

    #[error("consistency check failed for {what}: {first} vs {second} (|diff| = {diff:e} > {tol:e})")]
    Consistency { what: String, first: f64, second: f64, diff: f64, tol: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

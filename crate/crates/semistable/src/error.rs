//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A distribution or spec could not be constructed (e.g. a monotonicity
    /// violation of the tail).
    #[error("construction error: {0}")]
    Construction(String),

    /// A stated precondition of an operation does not hold for the inputs.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Quadrature / acceleration did not reach the requested accuracy.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Estimated memory or work exceeds the configured limits.
    #[error("resource limit exceeded: {0}")]
    Resource(String),

    /// Invalid experiment configuration.
    #[error("config error: {0}")]
    Config(String),

    /// The characteristic function equals 1, so 1/(1-phi) has a pole.
    #[error("pole of 1/(1-phi) at t={t}")]
    Pole { t: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

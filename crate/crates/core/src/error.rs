use thiserror::Error;

/// Errors reported by the engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension {dim} exceeds the configured cap of {cap}")]
    DimensionTooLarge { dim: usize, cap: usize },

    #[error("invalid prescription: {0}")]
    InvalidPrescription(String),

    #[error("target {theta} lies outside the attainable range [{lo}, {hi}]")]
    InfeasibleTarget { theta: f64, lo: f64, hi: f64 },

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("integrability failure: {0}")]
    IntegrabilityFailure(String),

    #[error("ill-conditioned correlation matrix: {0}")]
    IllConditioned(String),

    #[error("invalid strike {0}")]
    InvalidStrike(f64),

    #[error("inconsistent quotes: {0}")]
    InconsistentQuotes(String),

    #[error("unsupported payoff order: {0}")]
    UnsupportedPayoffOrder(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

pub(crate) fn parse_err(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

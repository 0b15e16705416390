use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("mixture marginal vanishes on symbol {symbol} which carries component mass")]
    ZeroMarginal { symbol: usize },
    #[error("size cap exceeded: {0}")]
    Cap(String),
    #[error("ill-conditioned interpolation (relative residual {residual:e}); use the direct method")]
    IllConditioned { residual: f64 },
    #[error("{0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Invalid(msg.into()))
}

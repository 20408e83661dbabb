use thiserror::Error;

/// Errors raised by the engine. Check failures are reported, not raised.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("derivative budget exhausted: {0}")]
    BudgetExhausted(String),
    #[error("irrational base value: {0}")]
    IrrationalBase(String),
    #[error("truncation order mismatch: {left} vs {right}")]
    OrderMismatch { left: usize, right: usize },
    #[error("coefficient index {q} outside 0..={max}")]
    OrderOutOfRange { q: usize, max: usize },
    #[error("metric is not invertible: {0}")]
    NotInvertible(String),
    #[error("chiral coefficients not symmetric in the first two indices at ({0}, {1}, {2})")]
    AsymmetricChiral(usize, usize, usize),
    #[error("connection data is not canonical: {0}")]
    NotCanonical(String),
    #[error("internal disagreement between equivalent formulas: {0}")]
    InternalDisagreement(String),
    #[error("star product rejected: {0}")]
    InvalidStarProduct(String),
    #[error("invalid spherical family: {0}")]
    InvalidFamily(String),
    #[error("unsupported closed form: {0}")]
    UnsupportedForm(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("function `{name}` takes {expected} argument(s), got {got} (byte {offset})")]
    Arity {
        name: String,
        expected: usize,
        got: usize,
        offset: usize,
    },
    #[error("unbound parameter `{0}`")]
    UnboundParameter(String),
    #[error("domain fault in `{subtree}`: {reason}")]
    DomainFault { subtree: String, reason: String },
    #[error("jet base points differ")]
    BasePointMismatch,
    #[error("metric is not positive definite (smallest eigenvalue {0:e})")]
    NotPositiveDefinite(f64),
    #[error("zero vector")]
    ZeroVector,
    #[error("unknown metric `{0}`")]
    UnknownMetric(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("degenerate linear system: |d| = {d:e} below threshold {threshold:e}")]
    DegenerateSystem { d: f64, threshold: f64 },
    #[error("eigenvalue input must be negative")]
    NonNegativeEigenvalue,
    #[error("eigenvalues must differ")]
    EqualEigenvalues,
    #[error("malformed instance: {0}")]
    Malformed(String),
    #[error("degree overflow: {0}")]
    DegreeOverflow(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised by the simulation and verification routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A model or construction parameter is outside its admissible range.
    #[error("parameter error: {0}")]
    Parameter(String),
    /// The half-edge count of a configuration-model graph must be even.
    #[error("configuration error: delta * n = {0} is odd")]
    OddHalfEdges(usize),
    /// Rejection sampling gave up before producing a simple graph.
    #[error("no simple graph after {attempts} attempts")]
    RetryExhausted { attempts: usize },
    /// The caller violated an operation's precondition.
    #[error("usage error: {0}")]
    Usage(String),
    /// An exact computation would exceed its configured size cap.
    #[error("size error: {what} = {size} exceeds cap {cap}")]
    Size { what: &'static str, size: usize, cap: usize },
    /// Bisection could not find a sign change on the search interval.
    #[error("bracket error: {0}")]
    Bracket(String),
    /// A quantity is not defined for the given input.
    #[error("undefined: {0}")]
    Undefined(String),
    /// Malformed text input.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_p(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("p = {p} must lie in (0, 1)")))
    }
}

pub(crate) fn check_q(q: f64) -> Result<()> {
    if q > 0.0 && q.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!("q = {q} must be positive")))
    }
}

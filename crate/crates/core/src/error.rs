use thiserror::Error;

/// Errors raised by constructions and checks in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point {x} lies outside the support ({support})")]
    OutsideSupport { x: f64, support: &'static str },

    #[error("{0} is not available for this family")]
    NotApplicable(String),

    #[error("eigensolver did not converge within {0} iterations")]
    NoConvergence(usize),

    #[error("ill-conditioned squared norm at n = {n} (condition number {cond:.3e})")]
    IllConditioned { n: usize, cond: f64 },

    #[error("band limit {omega} leaves an empty band")]
    EmptyBand { omega: f64 },

    #[error("requested {requested} exceeds generated range {available}")]
    OutOfRange { requested: usize, available: usize },

    #[error("relative residual {residual:.3e} falls between the consistency and inconsistency thresholds")]
    AmbiguousSolve { residual: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

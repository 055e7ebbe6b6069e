use thiserror::Error;

/// Errors raised across the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported dimension {0}; expected 1, 2 or 3")]
    UnsupportedDimension(usize),

    #[error("integrand is not finite at node {node:?}")]
    NonFiniteIntegrand { node: Vec<f64> },

    #[error("evaluation failed at {point:?}: {what}")]
    Evaluation { point: Vec<f64>, what: String },

    #[error("degenerate mass {0:e}")]
    DegenerateMass(f64),

    #[error("window [{lo}, {hi}] misses {missing:e} of the mass")]
    WindowCoverage { lo: f64, hi: f64, missing: f64 },

    #[error("internal consistency check failed: {0}")]
    InternalConsistency(String),

    #[error("degenerate transport map at x = {x}: T' = {t_prime:e}")]
    DegenerateMap { x: f64, t_prime: f64 },

    #[error("invalid eigenvalue {lambda} at x = {x}")]
    InvalidEigenvalue { x: f64, lambda: f64 },

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("sinkhorn did not converge after {iterations} iterations (marginal violation {violation:e})")]
    Convergence { iterations: usize, violation: f64 },

    #[error("kernel underflow at regularization {reg:e}; use a larger regularization")]
    KernelUnderflow { reg: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("deficit {0} exceeds 1, outside the L^r regime")]
    OutOfRegime(f64),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

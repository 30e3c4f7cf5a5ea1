use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid vector: {0}")]
    InvalidVector(String),

    #[error("invalid operator spec: {0}")]
    InvalidSpec(String),

    #[error("operator is not linear")]
    NotLinear,

    #[error("power iteration did not settle after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("operator is not nonexpansive: sampled Lipschitz ratio {ratio}")]
    NotNonexpansive { ratio: f64 },

    #[error("operator is not a contraction (modulus {alpha})")]
    NotAContraction { alpha: f64 },

    #[error(
        "no convergence after {iterations} iterations (contraction modulus q = {modulus}, last step {last_step:e}, tolerance {tol:e})"
    )]
    MaxIterExceeded {
        iterations: usize,
        modulus: f64,
        last_step: f64,
        tol: f64,
    },

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("schedule not strictly decreasing at n = {n}")]
    NonDecreasingSchedule { n: usize },

    #[error("point is not fixed: residual {residual:e}")]
    NotAFixedPoint { residual: f64 },

    #[error("no common fixed point: residual stalled at {tail:e} (initially {head:e})")]
    NoCommonFixedPoint { head: f64, tail: f64 },

    #[error("trace format error: {0}")]
    TraceFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

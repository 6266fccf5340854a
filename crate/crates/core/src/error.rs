use alloc::string::String;

use crate::measure::HypothesisReport;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("hypothesis violation (mu0_ok={}, mu1_ok={})", .0.mu0_ok, .0.mu1_ok)]
    HypothesisViolation(HypothesisReport),

    #[error("grid functions live on different grids")]
    GridMismatch,

    #[error("quadratic form is indefinite (value {value:e})")]
    IndefiniteForm { value: f64 },

    #[error("iteration did not converge after {iterations} sweeps")]
    ConvergenceFailure { iterations: usize },

    #[error("quadrature did not reach tolerance within {evaluations} evaluations")]
    NonConvergence { evaluations: usize },

    #[error("linear system is singular or too ill-conditioned (relative residual {residual:e})")]
    SingularSystem { residual: f64 },

    #[error("argument outside the domain: {0}")]
    DomainError(String),

    #[error("no radius up to {r_max} satisfies the target inequality")]
    NotFound { r_max: f64 },

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
}

use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GhoError {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("degenerate basis: initial Wronskian is {0:e}")]
    DegenerateBasis(f64),

    #[error("integration failure: {0}")]
    IntegrationFailure(String),

    #[error("rho vanishes at t = {0} (u and v both zero)")]
    ZeroRho(f64),

    #[error("caustic encountered between t_a = {t_a} and t_b = {t_b} (D = {denominator:e})")]
    CausticEncountered { t_a: f64, t_b: f64, denominator: f64 },

    #[error("grid too narrow: edge amplitude ratio {edge_ratio:e} exceeds {threshold:e}")]
    GridTooNarrow { edge_ratio: f64, threshold: f64 },

    #[error("grid under-resolved: kernel phase advances {phase_per_step:.3} rad per grid step (limit pi)")]
    GridUnderResolved { phase_per_step: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("linear solve failure: {0}")]
    LinearSolveFailure(String),

    #[error("time {t} lies outside the working interval [{t0}, {t1}]")]
    OutOfInterval { t: f64, t0: f64, t1: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for GhoError {
    fn from(err: std::io::Error) -> Self {
        GhoError::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, GhoError>;

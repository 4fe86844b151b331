use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Riccati iteration hit `max_iter` (or blew up) with the residual above tolerance.
    #[error("Riccati iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("inner matrix R + gamma * B'PB is singular")]
    SingularInnerMatrix,

    #[error("closed loop is unstable: spectral radius of sqrt(gamma) * A_cl is {radius}")]
    UnstableClosedLoop { radius: f64 },

    #[error("system generation failed after {attempts} attempts")]
    GenerationFailed { attempts: usize },

    #[error("matrix is not positive definite")]
    SingularP,

    #[error("transition batch is empty")]
    EmptyBatch,

    #[error("candidate set is empty")]
    EmptyCandidates,

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

use thiserror::Error;

/// Errors raised by mesh construction, the linear solver, estimation and training.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("conjugate gradients did not converge: {iterations} iterations, relative residual {residual:e}")]
    SolverDiverged { iterations: usize, residual: f64 },

    #[error("problem `{0}` has no exact solution")]
    NoExactSolution(String),

    #[error("solution was computed on a different mesh")]
    MeshMismatch,

    #[error("normalized estimates need a uniform polynomial order, found orders {min}..={max}")]
    NonUniformOrder { min: u8, max: u8 },

    #[error("episode is already finished")]
    EpisodeFinished,

    #[error("non-finite gradient in {0}")]
    NonFiniteGradient(String),

    #[error("malformed {what}: {detail}")]
    Parse { what: &'static str, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

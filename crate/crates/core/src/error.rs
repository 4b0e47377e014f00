use thiserror::Error;

/// Errors raised by the model builders and the solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("cross-section sample {name} = {value} must be strictly positive")]
    NonPositiveSample { name: &'static str, value: f64 },

    #[error("invalid model shape: {0}")]
    InvalidShape(String),

    #[error("projected endpoint {name} = {value} is not positive")]
    NonPositiveProjection { name: &'static str, value: f64 },

    #[error("argument {value} outside the domain [0, 1]")]
    DomainError { value: f64 },

    #[error(
        "lambda = {lambda} is infeasible: psi is not positive on (0, 1) (lower bound {lower})"
    )]
    InfeasibleLambda { lambda: f64, lower: f64 },

    #[error("near-degenerate discriminant {discriminant:e}; closed form unsafe")]
    NearDegenerate { discriminant: f64 },

    #[error("elliptic parameter out of range: {0}")]
    ParameterOutOfRange(String),

    #[error("degenerate homographic map: {0}")]
    DegenerateMap(String),

    #[error("could not bracket the root: {0}")]
    BracketFailure(String),

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("mesh count {0} is too small (need at least 2)")]
    MeshTooSmall(usize),

    #[error("infeasible bracket: {0}")]
    InfeasibleBracket(String),

    #[error("inverse iteration stalled: {0}")]
    IterationStall(String),

    #[error("coupling iteration did not converge in {iterations} iterations (last |dh| = {last_delta:e})")]
    MaxIterExceeded { iterations: usize, last_delta: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

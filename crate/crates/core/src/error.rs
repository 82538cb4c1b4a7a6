use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("unsupported distribution: {0}")]
    UnsupportedDistribution(String),

    #[error("graph is not a signed graph: {0}")]
    NotSigned(String),

    #[error("pole: x^2 = {x2} coincides with an edge weight squared")]
    Pole { x2: f64 },

    #[error("overflow: beta * max|J| = {scaled} is too large for the direct Bethe-Hessian; use regularized_laplacian")]
    Overflow { scaled: f64 },

    #[error("matrix too large for the dense path: {size} > cap {cap}")]
    TooLarge { size: usize, cap: usize },

    #[error("eigensolver did not converge after {iterations} iterations (best residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("average degree c = {c} <= 1: the spin-glass equation has no root")]
    UndetectableDegree { c: f64 },

    #[error("no ferromagnetic transition: c * mean(tanh(beta J)) never reaches 1")]
    NoFerromagneticTransition,

    #[error("root bracketing failed: {0}")]
    Bracket(String),

    #[error("empty graph: {0}")]
    EmptyGraph(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Whether the error stems from bad user input rather than a runtime failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_)
                | Error::Dimension { .. }
                | Error::UnsupportedDistribution(_)
                | Error::NotSigned(_)
                | Error::TooLarge { .. }
                | Error::UndetectableDegree { .. }
                | Error::EmptyGraph(_)
                | Error::Parse { .. }
                | Error::Io(_)
                | Error::Json(_)
        )
    }
}

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operation requires a {expected} space, got {found}")]
    WrongSpaceKind { expected: &'static str, found: String },

    #[error("point set must be nonempty")]
    EmptySet,

    #[error("non-finite coordinate in input")]
    NonFinite,

    #[error("matrix is not positive semidefinite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("operator is not monotone: {0}")]
    NotMonotone(String),

    #[error(
        "quadratic has a singular Hessian; its conjugate has no closed form, \
         sample it into a grid function and conjugate that instead"
    )]
    SingularQuadratic,

    #[error("conjugate not representable: {0}")]
    NotRepresentable(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("linear program: {0}")]
    Lp(String),

    #[error("inner minimization diverged: {0}")]
    InnerDivergence(String),

    #[error("no convergence after {iterations} iterations (best residual {residual:e})")]
    NonConvergence { residual: f64, iterations: usize },

    #[error("objective reached {value:e} < 0: the BC/TBC hypothesis fails")]
    NegativeValue { value: f64, point: Vec<f64> },

    #[error("objective is stationary at positive value {value:e}: no decomposition exists")]
    PositiveMinimum { value: f64, point: Vec<f64> },

    #[error("radicand {value:e} is negative: phi >= q is violated")]
    NegativeRadicand { value: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

use thiserror::Error;

/// Errors raised by the numerical kernels, model builders, and runners.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not positive definite: pivot {pivot:e} at index {index}")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("matrix is not Hermitian: relative defect {defect:e} exceeds {tol:e}")]
    NotHermitian { defect: f64, tol: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("singular system (zero pivot at column {0})")]
    SingularSystem(usize),

    #[error("coefficient not positive: c = {value:e} at {location:?}")]
    CoefficientNotPositive { value: f64, location: Vec<f64> },

    #[error("quadrature produced a non-finite entry in {0}")]
    QuadratureFailure(&'static str),

    #[error("basis is not orthonormalizable: breakdown at vector {index} (norm {norm:e})")]
    NotOrthonormalizable { index: usize, norm: f64 },

    #[error("data matrix is not symmetric: relative defect {defect:e} exceeds {tol:e}")]
    AsymmetricData { defect: f64, tol: f64 },

    #[error("finite-difference step too large: symmetrization defect {defect:e} exceeds {tol:e}")]
    StepTooLarge { defect: f64, tol: f64 },

    #[error("data matrix is singular")]
    SingularData,

    #[error("least-squares system is rank deficient: rank {rank} < {expected}")]
    RankDeficient { rank: usize, expected: usize },

    #[error("line search failed after {evaluations} evaluations")]
    LineSearchFailure { evaluations: usize },

    #[error("missing input: {0}")]
    MissingInput(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures that come from the numerics rather than from
    /// user input or the filesystem.
    pub fn is_numeric(&self) -> bool {
        !matches!(
            self,
            Error::Config(_) | Error::Parse(_) | Error::Io(_) | Error::MissingInput(_) | Error::Invariant(_)
        )
    }

    /// Process exit code: 2 for configuration and input problems, 3 for
    /// numerical failures, 4 for invariants caught at run time.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Invariant(_) => 4,
            e if e.is_numeric() => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

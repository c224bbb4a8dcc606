use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("matrix is not Hermitian (deviation {deviation:.3e})")]
    Hermiticity { deviation: f64 },
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    Positivity { min_eigenvalue: f64 },
    #[error("index out of range: {0}")]
    Index(String),
    #[error("invalid value: {0}")]
    InvalidValue(String),
    #[error("matrix is not diagonal (off-diagonal magnitude {0:.3e})")]
    NonDiagonal(f64),
    #[error("outcome has zero probability")]
    ImpossibleOutcome,
    #[error("states of knowledge are incompatible (zero overlap)")]
    IncompatibleKnowledge,
    #[error("states do not commute (commutator norm {0:.3e})")]
    Noncommuting(f64),
    #[error("construction needs strictly positive common weights (alpha = {alpha}, beta = {beta})")]
    DegenerateConstruction { alpha: f64, beta: f64 },
    #[error("common state escapes the support intersection (residual {residual:.3e})")]
    LemmaPrecondition { residual: f64 },
    #[error("states are inconsistent: supports have trivial intersection")]
    InconsistentStates,
    #[error("dimension {dim} exceeds the guard of {limit}")]
    DimensionGuard { dim: usize, limit: usize },
    #[error("constraint denominator vanishes")]
    SingularConstraint,
    #[error("effect parameter {0} lies outside [0, 1]")]
    InvalidEffect(String),
    #[error("eigendecomposition failed to converge")]
    NoConvergence,
}

impl Error {
    /// Stable name used in machine-readable reports.
    pub fn name(&self) -> &'static str {
        match self {
            Error::Shape(_) => "ShapeError",
            Error::Hermiticity { .. } => "HermiticityError",
            Error::Positivity { .. } => "PositivityError",
            Error::Index(_) => "IndexError",
            Error::InvalidValue(_) => "InvalidValueError",
            Error::NonDiagonal(_) => "NonDiagonalError",
            Error::ImpossibleOutcome => "ImpossibleOutcomeError",
            Error::IncompatibleKnowledge => "IncompatibleKnowledgeError",
            Error::Noncommuting(_) => "NoncommutingError",
            Error::DegenerateConstruction { .. } => "DegenerateConstructionError",
            Error::LemmaPrecondition { .. } => "LemmaPreconditionError",
            Error::InconsistentStates => "InconsistentStatesError",
            Error::DimensionGuard { .. } => "DimensionGuardError",
            Error::SingularConstraint => "SingularConstraintError",
            Error::InvalidEffect(_) => "InvalidEffectError",
            Error::NoConvergence => "NoConvergenceError",
        }
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised while building hierarchy levels, certifying, bounding or simulating.
#[derive(Debug, Error)]
pub enum Error {
    #[error("hierarchy level must be at least 1, got {0}")]
    InvalidLevel(usize),

    #[error("matrix `{what}` must be square, got {rows}x{cols}")]
    NotSquare {
        what: String,
        rows: usize,
        cols: usize,
    },

    #[error("dimension mismatch in `{what}`: expected {expected}, found {found}")]
    DimensionMismatch {
        what: String,
        expected: String,
        found: String,
    },

    #[error("lifted dimension {dim} exceeds the configured cap of {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("non-finite entry in `{0}`")]
    NonFinite(String),

    #[error("state matrix is singular or numerically singular (reciprocal condition {rcond:.3e}); the step response has no finite equilibrium")]
    SingularDynamics { rcond: f64 },

    #[error("semidefinite program is infeasible: {0}")]
    Infeasible(String),

    #[error("numerical failure in the semidefinite solver: {0}")]
    NumericalFailure(String),

    #[error("no feasible alpha: program infeasible at the lower end alpha = {alpha}")]
    NoFeasibleAlpha { alpha: f64 },

    #[error("certificate level {certificate} does not match hierarchy level {level}")]
    LevelMismatch { certificate: usize, level: usize },

    #[error("certificate vertices do not match the requested system: {0}")]
    VertexMismatch(String),

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn mismatch(what: impl Into<String>, expected: impl ToString, found: impl ToString) -> Self {
        Error::DimensionMismatch {
            what: what.into(),
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}

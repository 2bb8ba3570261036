use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failure modes shared across the laboratory.
///
/// Every variant except [`Error::Numeric`] and [`Error::BoundaryContact`] is a
/// rejected input; [`Error::is_validation`] draws that line for callers that
/// map errors onto exit codes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator is not Hermitian (max |A - A^dagger| = {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("state is not normalized (norm = {norm})")]
    NotNormalized { norm: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("invalid measurement basis: {0}")]
    InvalidBasis(String),

    #[error("forbidden transition: overlap probability is zero")]
    ForbiddenTransition,

    #[error("naked singularity: M^2 - Q^2 - a^2 = {discriminant:e} < 0")]
    NakedSingularity { discriminant: f64 },

    #[error("singular point: {0}")]
    SingularPoint(String),

    #[error("step size violation: {0}")]
    StepSize(String),

    #[error("geometry violation: {0}")]
    Geometry(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("wavefunction reached the grid boundary: {0}")]
    BoundaryContact(String),

    #[error("numerical failure: {0}")]
    Numeric(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for errors caused by the inputs rather than by the computation.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Numeric(_) | Error::BoundaryContact(_))
    }
}

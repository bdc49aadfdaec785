//! Error types shared by every module of the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Typed failures surfaced by the library.
///
/// The CLI maps these onto process exit codes: configuration and geometry
/// problems exit 2, numerical failures exit 3, resource limits exit 4.
#[derive(Debug, Error)]
pub enum Error {
    /// A geometric parameter is invalid (non-positive extent, point outside
    /// a section, embedding not nested, coordinate off the grid).
    #[error("geometry error: {0}")]
    Geometry(String),

    /// A mode index or truncation level is out of range.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// The computed spectrum is too short to certify the requested count.
    #[error("truncation error: {0}")]
    Truncation(String),

    /// A threshold falls within 1e-9 of an eigenvalue without being equal
    /// to it, so an index count cannot be certified.
    #[error("ambiguous threshold: {0}")]
    AmbiguousThreshold(String),

    /// Exponential evaluation would overflow (|sqrt(lambda) * x| > 700).
    #[error("range error: {0}")]
    Range(String),

    /// A slice norm vanished, so a frequency quotient is undefined.
    #[error("degenerate slice: {0}")]
    DegenerateSlice(String),

    /// The certified transfer-operator norm is not below 1, so the
    /// fixed-point solve cannot proceed.
    #[error("contraction failure: certified operator norm {norm}")]
    ContractionFailure { norm: f64 },

    /// An iteration failed to converge within its budget or window.
    #[error("convergence error: {0}")]
    Convergence(String),

    /// Basis members turned out numerically dependent (truncation too coarse).
    #[error("dependence error: {0}")]
    Dependence(String),

    /// The sparse linear solver did not reach its residual target.
    #[error("solver error: {0}")]
    Solver(String),

    /// A memory or size estimate exceeded the configured cap.
    #[error("resource error: {0}")]
    Resource(String),

    /// Invalid input that is neither geometric nor dimensional (bad config,
    /// mismatched series arithmetic, violated operation precondition).
    #[error("validation error: {0}")]
    Validation(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code the CLI reports for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Geometry(_)
            | Error::Dimension(_)
            | Error::Truncation(_)
            | Error::AmbiguousThreshold(_)
            | Error::Validation(_)
            | Error::Io(_) => 2,
            Error::Range(_)
            | Error::DegenerateSlice(_)
            | Error::ContractionFailure { .. }
            | Error::Convergence(_)
            | Error::Dependence(_)
            | Error::Solver(_) => 3,
            Error::Resource(_) => 4,
        }
    }
}

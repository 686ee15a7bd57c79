use alloc::string::String;

/// Crate-wide error type.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("SVD failed to converge after {sweeps} sweeps")]
    SvdNoConvergence { sweeps: usize },
    #[error("zero column {index} cannot be scaled to unit norm")]
    ZeroColumn { index: usize },
    #[error("dimension guard exceeded: {needed} unknowns > cap {cap}")]
    SizeGuard { needed: usize, cap: usize },
    #[error("certificate system is singular or inconsistent (relative least-squares residual {residual:.3e})")]
    CertificateSystem { residual: f64 },
    #[error("degenerate sampling: {0}")]
    DegenerateSampling(String),
    #[error(
        "matrix is not invertible enough: condition estimate {cond:.3e} exceeds guard {guard:.3e}"
    )]
    IllConditioned { cond: f64, guard: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn shape_err(expected: impl Into<String>, got: impl Into<String>) -> Error {
    Error::ShapeMismatch {
        expected: expected.into(),
        got: got.into(),
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

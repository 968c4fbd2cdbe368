use thiserror::Error;

use crate::bounds::BurninStatus;

/// Errors raised by the library. CLI-level configuration errors live in
/// [`crate::cli::ConfigError`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {pivot:e} at row {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("matrix is not positive semidefinite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("V_t + Gamma is not positive definite yet")]
    Singular,

    #[error("regularizer Gamma is singular; the sub-Gaussian radius needs det(Gamma) > 0")]
    GammaSingular,

    #[error("burn-in condition violated: {0}")]
    BurninViolated(BurninStatus),

    #[error("ellipsoid not contained (max outer form {max_form})")]
    NotContained { max_form: f64 },

    #[error("lambda outside the Bernstein domain: ||lambda||^2 = {norm_sq} > eps^2 = {limit}")]
    LambdaOutOfDomain { norm_sq: f64, limit: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("observation stream: {0}")]
    Stream(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

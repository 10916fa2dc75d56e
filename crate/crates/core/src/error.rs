use thiserror::Error;

/// Errors raised by the numerical and statistical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum EllipError {
    #[error("matrix is not symmetric (max |M - M^T| = {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("matrix is not positive definite (pivot {pivot} failed)")]
    NotPositiveDefinite { pivot: usize },

    #[error("matrix is indefinite (eigenvalue {eigenvalue:e})")]
    Indefinite { eigenvalue: f64 },

    #[error("matrix is singular (smallest eigenvalue {min_eigenvalue:e})")]
    Singular { min_eigenvalue: f64 },

    #[error("design matrix is rank deficient (singular value {singular_value:e})")]
    RankDeficient { singular_value: f64 },

    #[error("matrix is not idempotent (||P^2 - P|| = {residual:e})")]
    NotIdempotent { residual: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, EllipError>;

impl EllipError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        EllipError::InvalidInput(msg.into())
    }

    pub(crate) fn dims(expected: impl Into<String>, found: impl Into<String>) -> Self {
        EllipError::DimensionMismatch {
            expected: expected.into(),
            found: found.into(),
        }
    }

    /// True for errors caused by the data being numerically unusable, as
    /// opposed to malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            EllipError::NotSymmetric { .. }
                | EllipError::NotPositiveDefinite { .. }
                | EllipError::Indefinite { .. }
                | EllipError::Singular { .. }
                | EllipError::RankDeficient { .. }
                | EllipError::NotIdempotent { .. }
                | EllipError::NonFinite(_)
        )
    }
}

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point outside the domain: {0}")]
    Domain(String),

    /// An exponential penalty term would overflow.
    #[error("penalty exponent {exponent:.3e} exceeds the overflow guard {limit}")]
    NumericalRange { exponent: f64, limit: f64 },

    #[error("non-finite {what} at iterate {iter}")]
    NonFinite { what: &'static str, iter: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("assumption violated: {0}")]
    AssumptionViolation(String),

    #[error("reference Hessian is singular or indefinite (smallest eigenvalue {lambda_min:.3e})")]
    Conditioning { lambda_min: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

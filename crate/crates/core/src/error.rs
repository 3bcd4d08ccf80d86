use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("sample period mismatch: filter expects dt = {expected}, signal has dt = {actual}")]
    SamplePeriodMismatch { expected: f64, actual: f64 },

    #[error("normal equations are numerically singular (condition estimate {condition:e})")]
    IllConditioned { condition: f64 },

    #[error("Cholesky factorization failed: {0}")]
    Factorization(String),

    #[error("empty selection: {0}")]
    EmptySelection(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}

pub(crate) fn ensure_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("must be positive and finite, got {value}"),
        })
    }
}

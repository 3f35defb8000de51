use nalgebra::DMatrix;
use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("non-finite entry at index {index}: {value}")]
    NonFinite { index: usize, value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("domain violation: {0}")]
    Domain(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The Birkhoff extraction could not find a perfect matching on the
    /// positive support; usually means accumulated error drove entries
    /// negative. Carries the residual so the caller can inspect it.
    #[error("no perfect matching on the positive support (residual mass {mass:.3e})")]
    NoPerfectMatching { mass: f64, residual: DMatrix<f64> },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
    pub fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}

/// Checks that every entry is finite; reports the first offender.
pub fn ensure_finite(v: &[f64]) -> Result<()> {
    for (index, &value) in v.iter().enumerate() {
        if !value.is_finite() {
            return Err(Error::NonFinite { index, value });
        }
    }
    Ok(())
}

pub fn ensure_same_len(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    Ok(())
}

//! Dense linear-algebra support: discrete state-space blocks and a real
//! eigenvalue solver used for stability checks.

mod eigen;
mod statespace;

pub use eigen::{eigenvalues, hessenberg, spectral_radius};
pub use statespace::{transfer_at as statespace_transfer, StateSpace};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch in {context}: {detail}")]
    DimensionMismatch { context: String, detail: String },
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("eigenvalue iteration did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },
}

impl LinalgError {
    pub(crate) fn dims(context: impl Into<String>, detail: impl Into<String>) -> Self {
        LinalgError::DimensionMismatch {
            context: context.into(),
            detail: detail.into(),
        }
    }
}

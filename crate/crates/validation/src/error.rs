use thiserror::Error;
use wgfb_core::{AnalyticError, ModelError};
use wgfb_mps::MpsError;

#[derive(Debug, Error)]
pub enum ValidationError {
    #[error("grids do not overlap: [{a_lo}, {a_hi}] vs [{b_lo}, {b_hi}]")]
    GridMismatch { a_lo: f64, a_hi: f64, b_lo: f64, b_hi: f64 },
    #[error("no spectral peak found: {0}")]
    PeakNotFound(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
    #[error(transparent)]
    Mps(#[from] MpsError),
}

pub type ValidationResult<T> = Result<T, ValidationError>;

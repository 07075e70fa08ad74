use thiserror::Error;
use wgfb_core::ModelError;

use crate::checkpoint::CheckpointError;

#[derive(Debug, Error)]
pub enum MpsError {
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    #[error(transparent)]
    Model(#[from] ModelError),

    #[error("step {step} discarded weight {discarded:.3e} exceeds budget {budget:.1e}")]
    TruncationBudgetExceeded { step: usize, discarded: f64, budget: f64 },

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("bins {first}..={last} are outside the scattered output window {lo}..{hi}")]
    WindowOutOfRange { first: usize, last: usize, lo: usize, hi: usize },

    #[error("correlation tail {tail:.3e} has not decayed below 1% of peak {peak:.3e}; enlarge the window")]
    WindowTooShort { tail: f64, peak: f64 },

    #[error("intensity below floor at lags {lags:?}")]
    IntensityFloor { lags: Vec<usize> },

    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
}

pub type MpsResult<T> = Result<T, MpsError>;

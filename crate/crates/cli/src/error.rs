use std::path::PathBuf;

use thiserror::Error;
use wgfb_core::{AnalyticError, ModelError};
use wgfb_validate::ValidationError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config does not parse: {0}")]
    ConfigParse(#[from] serde_json::Error),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Model(#[from] ModelError),

    #[error(transparent)]
    Analytic(#[from] AnalyticError),

    #[error(transparent)]
    Engine(#[from] ValidationError),
}

pub type CliResult<T> = Result<T, CliError>;

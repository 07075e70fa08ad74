use thiserror::Error;

use crate::model::ModelError;
use crate::numerics::QuadratureError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticError {
    #[error(transparent)]
    Model(#[from] ModelError),

    #[error("C± denominator 2p cos(pτ) − 2iλ sin(pτ) vanishes (|·| = {magnitude:e}) at p = {p}")]
    DegenerateDenominator { magnitude: f64, p: num_complex::Complex64 },

    #[error("dressed Green's function has a pole at ν = {nu} (|denominator| = {magnitude:e})")]
    PoleProximity { nu: f64, magnitude: f64 },

    #[error("g_n term exceeds 1e300 at t = {t}, n = {n}")]
    Overflow { t: f64, n: usize },

    #[error("unsupported configuration: {0}")]
    UnsupportedConfiguration(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("quadrature did not converge: {0}")]
    QuadratureNotConverged(#[from] QuadratureError),
}

pub type AnalyticResult<T> = Result<T, AnalyticError>;

//! Analytic two-photon scattering off an emitter in front of a mirror.
//!
//! [`tls`] covers the two-level emitter, [`vlevel`] the chirally coupled
//! V-level emitter. All quantities use the unit system of [`ModelParams`].

pub mod error;
pub mod model;
pub mod numerics;
pub mod results;
pub mod tls;
pub mod vlevel;

pub use error::{AnalyticError, AnalyticResult};
pub use model::{cos_round_trip, markov_effective, phase_factor, EmitterKind, MarkovEffectiveParams, ModelError, ModelParams};
pub use results::{symmetric_grid, CorrelationResult, SpectralResult};

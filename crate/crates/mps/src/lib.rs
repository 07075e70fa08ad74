//! Matrix-product-state evolution of an emitter in front of a mirror in the
//! time-bin picture, with observables for comparison against the analytic
//! engine.
//!
//! The chain holds, left to right, scattered output bins, the bins inside
//! the delay loop, the emitter, and the bins that have not arrived yet. One
//! stroboscopic step couples the emitter to the bin entering the loop and
//! to the bin returning from the mirror `m` steps later.

pub mod checkpoint;
pub mod config;
pub mod engine;
mod error;
mod linalg;
pub mod observables;
pub mod state;

pub use config::{DriveConfig, MpsConfig, StepScheme};
pub use engine::{run_scattering, step_coupling, stroboscopic_step, Diagnostics, Evolution};
pub use observables::{
    field_correlations, g2_mps, inelastic_spectrum_mps, populations, FieldCorrelations, LocalOp, Normalization, Populations, Window,
};
pub use error::{MpsError, MpsResult};
pub use state::{build_one_photon_mps, build_state, build_two_photon_mps, build_vacuum_mps, EmitterInit, MpsState, Site};

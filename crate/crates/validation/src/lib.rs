//! Checks tying the analytic engines, the MPS engine and the known limits
//! of the model together. Every check yields a [`ComparisonReport`].

pub mod analytic;
pub mod cavity;
pub mod compare;
pub mod cross;
pub mod drive;
pub mod error;
pub mod features;
pub mod markov;
pub mod report;
pub mod runs;

pub use cavity::{cavity_linewidth_check, CavitySettings};
pub use compare::{compare_correlations, compare_spectra, relative_l2};
pub use cross::{cross_engine_two_photon, CrossEngineOutcome, CrossEngineSettings};
pub use drive::{saturation_check, weak_drive_scaling, DriveSettings, WeakDriveOutcome};
pub use error::{ValidationError, ValidationResult};
pub use features::{
    branch_invariance, closed_form_consistency, elastic_unitarity, mps_conservation, non_analyticity, spectrum_symmetry, tls_zero_locus,
    unscattered_g2, v_markov_zero_locus, v_phase_independence, v_small_tau_zero, vanishing_spectrum, wbar_oracle,
};
pub use markov::{markov_limit_check, markov_spectrum};
pub use report::{ComparisonReport, Metric};
pub use runs::{run_coherent, run_two_photon, MpsObservables, MpsSettings};

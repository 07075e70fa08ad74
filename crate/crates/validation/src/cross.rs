//! MPS against the analytic engines in the two-photon sector.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use wgfb_core::{symmetric_grid, CorrelationResult, ModelParams, SpectralResult};

use crate::analytic;
use crate::compare::{compare_correlations, compare_spectra};
use crate::error::{ValidationError, ValidationResult};
use crate::report::ComparisonReport;
use crate::runs::{run_two_photon, MpsObservables, MpsSettings};

/// Protocol of a cross-engine comparison.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossEngineSettings {
    /// Upper bound on `γΔt`.
    pub gamma_dt: f64,
    /// Fewest bins per delay; `Δt` shrinks below `gamma_dt/γ` to keep them.
    pub min_bins_per_delay: usize,
    #[serde(rename = "gammaT")]
    pub gamma_t: f64,
    pub max_bond: usize,
    pub trunc_threshold: f64,
    /// Relative L2 tolerance on `S̃` over `|ν| ≤ 2π/τ`.
    pub spectrum_tol: f64,
    /// Pointwise tolerance on `g²` over `t ≤ g2_window/γ`.
    pub g2_tol: f64,
    pub g2_window: f64,
    pub nu_points: usize,
}

impl CrossEngineSettings {
    /// `γΔt = 0.1`, `D = 200`, `γT = 300`, 5% and 0.02.
    pub fn full() -> Self {
        Self {
            gamma_dt: 0.1,
            min_bins_per_delay: 10,
            gamma_t: 300.0,
            max_bond: 200,
            trunc_threshold: 1e-12,
            spectrum_tol: 0.05,
            g2_tol: 0.02,
            g2_window: 10.0,
            nu_points: 201,
        }
    }

    /// `D = 64`, `γT = 100` and a 10% spectral tolerance.
    pub fn ci() -> Self {
        Self { gamma_t: 100.0, max_bond: 64, spectrum_tol: 0.10, ..Self::full() }
    }

    /// MPS discretization for `params`. Two-photon amplitudes per bin scale
    /// as `1/N` for `N` packet bins, so the truncation threshold is capped at
    /// `10⁻⁸/N²`.
    pub fn mps_settings(&self, params: &ModelParams) -> MpsSettings {
        let g = params.gamma;
        let dt = (self.gamma_dt / g).min(params.tau / self.min_bins_per_delay.max(1) as f64);
        let n = (self.gamma_t / (g * dt)).round().max(1.0);
        MpsSettings { trunc_threshold: self.trunc_threshold.min(1e-8 / (n * n)), ..MpsSettings::new(dt, self.gamma_t, self.max_bond) }
    }
}

/// Both engines' results and the reports comparing them.
#[derive(Clone, Debug)]
pub struct CrossEngineOutcome {
    pub mps: MpsObservables,
    pub analytic_spectrum: SpectralResult,
    pub analytic_g2: CorrelationResult,
    pub reports: Vec<ComparisonReport>,
}

/// Runs the MPS two-photon scattering and compares `S̃` over
/// `|ν| ≤ 2π/τ` and `g²` over `[0, g2_window/γ]` with the analytic engine at
/// the snapped delay.
pub fn cross_engine_two_photon(params: &ModelParams, settings: &CrossEngineSettings) -> ValidationResult<CrossEngineOutcome> {
    if !(params.gamma > 0.0 && params.tau > 0.0) {
        return Err(ValidationError::InvalidInput("cross-engine comparison needs γ > 0 and τ > 0".into()));
    }
    let mps_settings = settings.mps_settings(params);
    let (_, snapped) = mps_settings.config(params)?;
    let grid = symmetric_grid(2.0 * PI / snapped.tau, settings.nu_points);
    let t_max = settings.g2_window / params.gamma;
    let mps = run_two_photon(&snapped, &mps_settings, &grid, t_max)?;
    let analytic_spectrum = analytic::spectrum(&mps.params, &grid)?;
    let analytic_g2 = analytic::g2(&mps.params, &mps.g2.grid)?;

    let echo = |r: ComparisonReport| {
        r.with("params", mps.params)
            .with("dt", mps.config.dt)
            .with("gammaT", settings.gamma_t)
            .with("max_bond", settings.max_bond)
            .with("bond_reached", mps.diagnostics.max_bond)
            .with("trunc_threshold", mps.config.trunc_threshold)
            .with("cumulative_discarded", mps.diagnostics.cumulative_discarded)
    };
    let spectrum = echo(compare_spectra(&mps.spectrum, &analytic_spectrum, settings.spectrum_tol)?.named("cross-engine-spectrum"));
    let g2 = echo(compare_correlations(&mps.g2, &analytic_g2, t_max, settings.g2_tol)?.named("cross-engine-g2"));
    Ok(CrossEngineOutcome { mps, analytic_spectrum, analytic_g2, reports: vec![spectrum, g2] })
}

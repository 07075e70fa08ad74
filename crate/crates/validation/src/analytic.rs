//! The analytic engines behind one interface.

use wgfb_core::{tls, vlevel, AnalyticResult, CorrelationResult, EmitterKind, ModelParams, SpectralResult};

/// `S̃(ν)` on `grid` from the engine matching the emitter.
pub fn spectrum(params: &ModelParams, grid: &[f64]) -> AnalyticResult<SpectralResult> {
    match params.emitter {
        EmitterKind::TwoLevel { .. } => tls::inelastic_spectrum(grid, params),
        EmitterKind::ChiralV { .. } => vlevel::inelastic_spectrum_v(grid, params),
    }
}

/// `g²(t)` on `grid` from the engine matching the emitter.
pub fn g2(params: &ModelParams, grid: &[f64]) -> AnalyticResult<CorrelationResult> {
    match params.emitter {
        EmitterKind::TwoLevel { .. } => tls::g2(grid, params),
        EmitterKind::ChiralV { .. } => vlevel::g2_v(grid, params),
    }
}

/// Spectrum including the elastic weight for a packet of length `γT`.
pub fn spectrum_with_elastic(params: &ModelParams, grid: &[f64], gamma_t: f64) -> AnalyticResult<SpectralResult> {
    match params.emitter {
        EmitterKind::TwoLevel { .. } => tls::spectrum_with_elastic(grid, params, gamma_t),
        EmitterKind::ChiralV { .. } => vlevel::spectrum_v_with_elastic(grid, params, gamma_t),
    }
}

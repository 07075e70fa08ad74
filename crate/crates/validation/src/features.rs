//! Formula-level checks: closed forms, the integral-equation oracle,
//! spectral zeros, non-analyticities of `g²` and structural invariants.

use std::f64::consts::PI;

use num_complex::Complex64;
use wgfb_core::tls::{self, WbarQuadrature};
use wgfb_core::{symmetric_grid, vlevel, ModelParams};
use wgfb_mps::{build_two_photon_mps, field_correlations, g2_mps, run_scattering, MpsConfig, StepScheme, Window};

use crate::analytic;
use crate::error::{ValidationError, ValidationResult};
use crate::report::{ComparisonReport, Metric};
use crate::runs::MpsSettings;

fn max_relative(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / y.abs().max(1e-12 * scale).max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

/// Analytic `S̃` against the φ = 0 (two-level) or δ = 0 (V-level) closed
/// form on `points` frequencies in `|ν| ≤ 2π/τ`; the value is the largest
/// relative deviation.
pub fn closed_form_consistency(params: &ModelParams, points: usize, tol: f64) -> ValidationResult<ComparisonReport> {
    let nu_max = if params.tau > 0.0 { 2.0 * PI / params.tau } else { 10.0 * params.gamma };
    let grid = symmetric_grid(nu_max, points);
    let s = analytic::spectrum(params, &grid)?;
    let closed: Vec<f64> = if params.emitter.is_two_level() {
        grid.iter().map(|&nu| tls::closed_form_phi0(nu, params)).collect::<Result<_, _>>()?
    } else {
        grid.iter().map(|&nu| vlevel::closed_form_v_delta0(nu, params)).collect::<Result<_, _>>()?
    };
    Ok(ComparisonReport::new("closed-form", Metric::MaxAbs, max_relative(&s.inelastic, &closed), tol)
        .with("params", params)
        .with("points", points))
}

/// Integral-equation residual of `W̄` at each `ν′`, for each `η` in turn.
/// Returns the residual at the last (finest) `η` against `tol` and the
/// largest ratio between consecutive refinements, which must stay below 1.
pub fn wbar_oracle(params: &ModelParams, nu_primes: &[f64], etas: &[f64], tol: f64) -> ValidationResult<Vec<ComparisonReport>> {
    if etas.is_empty() || nu_primes.is_empty() {
        return Err(ValidationError::InvalidInput("the W̄ oracle needs sample frequencies and η values".into()));
    }
    let mut worst = Vec::with_capacity(etas.len());
    for &eta in etas {
        let spec = WbarQuadrature { eta, ..WbarQuadrature::new(params.gamma) };
        let r = nu_primes.iter().map(|&nu| tls::wbar_residual(nu, 0.0, params, &spec)).collect::<Result<Vec<_>, _>>()?;
        worst.push(r.into_iter().fold(0.0, f64::max));
    }
    let finest = *worst.last().unwrap_or(&f64::NAN);
    let ratio = worst.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max);
    Ok(vec![
        ComparisonReport::new("wbar-residual", Metric::MaxAbs, finest, tol)
            .with("params", params)
            .with("eta", etas.last())
            .with("nu_primes", nu_primes),
        ComparisonReport::new("wbar-refinement", Metric::MaxAbs, ratio, 1.0)
            .with("params", params)
            .with("etas", etas)
            .with("residuals", &worst),
    ])
}

fn spectrum_at(params: &ModelParams, nu: f64) -> ValidationResult<f64> {
    Ok(analytic::spectrum(params, &[nu])?.inelastic[0])
}

fn grid_peak(params: &ModelParams, nu_max: f64) -> ValidationResult<f64> {
    let s = analytic::spectrum(params, &symmetric_grid(nu_max, 801))?;
    Ok(s.peak().map_or(0.0, |p| p.1))
}

/// Minimizer of `f` on `[a, b]` by golden-section search.
fn golden_min(mut a: f64, mut b: f64, f: impl Fn(f64) -> ValidationResult<f64>) -> ValidationResult<f64> {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let (mut c, mut d) = (b - r * (b - a), a + r * (b - a));
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    for _ in 0..200 {
        if (b - a).abs() <= 1e-13 * (a.abs() + b.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            (d, fd) = (c, fc);
            c = b - r * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            (c, fc) = (d, fd);
            d = a + r * (b - a);
            fd = f(d)?;
        }
    }
    Ok(0.5 * (a + b))
}

/// Two-level `S̃` at `ν = ((2l − 1)π ± φ)/τ`, both signs of `ν`, relative
/// to the spectral peak over `|ν| ≤ 2π/τ`.
pub fn tls_zero_locus(params: &ModelParams, orders: &[u32], tol: f64) -> ValidationResult<ComparisonReport> {
    if !params.emitter.is_two_level() || !(params.tau > 0.0) {
        return Err(ValidationError::InvalidInput("the zero locus needs a two-level emitter with τ > 0".into()));
    }
    let peak = grid_peak(params, 2.0 * PI / params.tau)?;
    let mut worst = (0.0f64, f64::NAN);
    for &l in orders {
        for sign in [1.0, -1.0] {
            let nu = ((2 * l - 1) as f64 * PI + sign * params.phi) / params.tau;
            for nu in [nu, -nu] {
                let v = spectrum_at(params, nu)? / peak;
                if v >= worst.0 {
                    worst = (v, nu);
                }
            }
        }
    }
    Ok(ComparisonReport::new("tls-zero-locus", Metric::MaxAbs, worst.0, tol)
        .with("params", params)
        .with("worst_nu", worst.1)
        .with("peak", peak))
}

/// V-level `S̃` at the Markovian locus `(ν/γ)² + (δ/γ)² = 1/4`, relative to
/// the peak. The spectral minimum near it is recorded alongside.
pub fn v_markov_zero_locus(params: &ModelParams, tol: f64) -> ValidationResult<ComparisonReport> {
    let (delta, _) = params.v_deltas()?;
    let g = params.gamma;
    let x = 0.25 - (delta / g).powi(2);
    if x < 0.0 {
        return Err(ValidationError::InvalidInput(format!("no Markovian zero for |δ| = {} > γ/2", delta.abs())));
    }
    let nu = x.sqrt() * g;
    let peak = grid_peak(params, 4.0 * g)?;
    let value = spectrum_at(params, nu)? / peak;
    let hyperbola = (0.25 + (delta / g).powi(2)).sqrt() * g;
    let found = golden_min(0.5 * hyperbola, 1.5 * hyperbola, |v| spectrum_at(params, v))?;
    Ok(ComparisonReport::new("v-markov-zero-locus", Metric::MaxAbs, value, tol)
        .with("params", params)
        .with("nu", nu)
        .with("minimum_nu", found)
        .with("minimum_relative", spectrum_at(params, found)? / peak))
}

/// Small-delay zero of the V-level spectrum at `δ = 0`: the minimum of `S̃`
/// near `ν/γ = ¼√(γτ) − (γτ)^{3/2}/16`, compared with that expansion.
pub fn v_small_tau_zero(params: &ModelParams, tol: f64) -> ValidationResult<ComparisonReport> {
    params.v_deltas()?;
    let g = params.gamma;
    let x = g * params.tau;
    let predicted = g * (0.25 * x.sqrt() - x.powf(1.5) / 16.0);
    if !(predicted > 0.0) {
        return Err(ValidationError::InvalidInput(format!("expansion gives no positive zero at γτ = {x}")));
    }
    let found = golden_min(0.5 * predicted, 1.5 * predicted, |v| spectrum_at(params, v))?;
    let peak = grid_peak(params, 4.0 * g)?;
    Ok(ComparisonReport::new("v-small-tau-zero", Metric::MaxAbs, (found / predicted - 1.0).abs(), tol)
        .with("params", params)
        .with("predicted", predicted)
        .with("found", found)
        .with("relative_depth", spectrum_at(params, found)? / peak))
}

/// Largest `S̃` of `params` relative to the peak of `reference`.
pub fn vanishing_spectrum(params: &ModelParams, reference: &ModelParams, tol: f64) -> ValidationResult<ComparisonReport> {
    let g = params.gamma;
    let s = analytic::spectrum(params, &symmetric_grid(10.0 * g, 401))?;
    let largest = s.inelastic.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let r_max = if reference.tau > 0.0 { (2.0 * PI / reference.tau).min(10.0 * g) } else { 10.0 * g };
    let peak = grid_peak(reference, r_max)?;
    Ok(ComparisonReport::new("vanishing-spectrum", Metric::MaxAbs, largest / peak, tol)
        .with("params", params)
        .with("reference", reference)
        .with("reference_peak", peak))
}

/// Jump between the left and right slopes of the analytic `g²` at `t`,
/// from one-sided differences with step `h`.
pub fn slope_jump(params: &ModelParams, t: f64, h: f64) -> ValidationResult<f64> {
    let v = analytic::g2(params, &[t - h, t, t + h])?.values;
    Ok(((v[2] - v[1]) - (v[1] - v[0])).abs() / h)
}

/// Slope jumps at `t = τ` and `2τ` against the largest jump at the smooth
/// points `jτ/8` (`j` not a multiple of 8) in `(0, 3τ)`.
///
/// With `expect_kink` the report holds `baseline/jump(τ)` (tolerance 0.1);
/// otherwise `jump(2τ)/baseline` (tolerance 2).
pub fn non_analyticity(params: &ModelParams, at_delays: f64, expect_kink: bool) -> ValidationResult<ComparisonReport> {
    let tau = params.tau;
    let h = 1e-3 * tau;
    let baseline = (1..24)
        .filter(|j| j % 8 != 0)
        .map(|j| slope_jump(params, j as f64 * tau / 8.0, h))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let jump = slope_jump(params, at_delays * tau, h)?;
    let r = if expect_kink {
        ComparisonReport::new("g2-kink", Metric::MaxAbs, baseline / jump, 0.1)
    } else {
        ComparisonReport::new("g2-no-kink", Metric::MaxAbs, jump / baseline, 2.0)
    };
    Ok(r.with("params", params).with("t_over_tau", at_delays).with("jump", jump).with("baseline", baseline).with("h", h))
}

/// `||s| − 1|` of the elastic amplitude.
pub fn elastic_unitarity(params: &ModelParams, tol: f64) -> ValidationResult<ComparisonReport> {
    let s = if params.emitter.is_two_level() { tls::elastic_amplitude(params)? } else { vlevel::elastic_amplitude_v(params)? };
    Ok(ComparisonReport::new("elastic-unitarity", Metric::MaxAbs, (s.norm() - 1.0).abs(), tol).with("params", params))
}

/// `max |S̃(ν) − S̃(−ν)|` relative to the peak.
pub fn spectrum_symmetry(params: &ModelParams, nus: &[f64], tol: f64) -> ValidationResult<ComparisonReport> {
    let pos = analytic::spectrum(params, nus)?.inelastic;
    let neg: Vec<f64> = nus.iter().map(|v| -v).collect();
    let neg = analytic::spectrum(params, &neg)?.inelastic;
    let scale = pos.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let d = pos.iter().zip(&neg).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(ComparisonReport::new("spectrum-symmetry", Metric::MaxAbs, d / scale, tol).with("params", params))
}

/// Largest relative change of the V-level `S̃` over the phases `phis`.
pub fn v_phase_independence(params: &ModelParams, phis: &[f64], nus: &[f64], tol: f64) -> ValidationResult<ComparisonReport> {
    params.v_deltas()?;
    let base = analytic::spectrum(params, nus)?.inelastic;
    let mut worst = 0.0f64;
    for &phi in phis {
        let other = analytic::spectrum(&params.with_phi(phi)?, nus)?.inelastic;
        worst = worst.max(max_relative(&other, &base));
    }
    Ok(ComparisonReport::new("v-phase-independence", Metric::MaxAbs, worst, tol).with("params", params).with("phis", phis))
}

/// Largest relative change of `t̂(ν)` and the elastic amplitude when the
/// two-level square root `p` is taken on the other branch.
pub fn branch_invariance(params: &ModelParams, nus: &[f64], tol: f64) -> ValidationResult<ComparisonReport> {
    let a = tls::build_context_on_branch(params, false)?;
    let b = tls::build_context_on_branch(params, true)?;
    let rel = |x: Complex64, y: Complex64| (x - y).norm() / y.norm().max(f64::MIN_POSITIVE);
    let mut worst = 0.0f64;
    for &nu in nus {
        worst = worst.max(rel(a.t_hat(nu)?, b.t_hat(nu)?));
    }
    Ok(ComparisonReport::new("branch-invariance", Metric::MaxAbs, worst, tol).with("params", params))
}

/// Norm drift and excitation number of an undriven two-photon run:
/// `|1 − ‖ψ‖²|` against the cumulative discarded weight, and `|N − 2|`
/// against twice that weight, both with a rounding allowance `slack`.
pub fn mps_conservation(params: &ModelParams, settings: &MpsSettings, slack: f64) -> ValidationResult<Vec<ComparisonReport>> {
    let (config, params) = settings.config(params)?;
    let state = build_two_photon_mps(&config, &params)?;
    let (_, d) = run_scattering(state, &params, &config, None)?;
    let excited: f64 = d.emitter_populations.iter().skip(1).sum();
    let drift = (1.0 - d.norm * d.norm).abs();
    let number = d.total_photons + excited;
    Ok(vec![
        ComparisonReport::new("norm-drift", Metric::MaxAbs, drift, d.cumulative_discarded + slack)
            .with("params", params)
            .with("cumulative_discarded", d.cumulative_discarded),
        ComparisonReport::new("excitation-number", Metric::MaxAbs, (number - 2.0).abs(), 2.0 * d.cumulative_discarded + slack)
            .with("params", params)
            .with("excitations", number),
    ])
}

/// `g²` of a two-photon packet that never meets the emitter (`γ = 0`);
/// the value is `max |g² − ½|` over the flat window.
pub fn unscattered_g2(tau: f64, dt: f64, packet_bins: usize, tol: f64) -> ValidationResult<ComparisonReport> {
    let params = ModelParams::two_level(0.0, tau, 0.0, 0.0)?;
    let m = (tau / dt).round().max(1.0) as usize;
    let config = MpsConfig {
        dt,
        n_steps: packet_bins.max(2 * m + 4),
        delay_bins: m,
        max_bond: 16,
        trunc_threshold: 1e-14,
        bin_cutoff: 3,
        tail_bins: 0,
        step_budget: 1e-4,
        scheme: StepScheme::Symmetric,
    };
    let params = params.with_tau(m as f64 * dt)?;
    let state = build_two_photon_mps(&config, &params)?;
    let (state, _) = run_scattering(state, &params, &config, None)?;
    let corr = field_correlations(&state, Window::default_for(&state, false)?, None)?;
    let g = g2_mps(&corr, dt, m, 1e-12)?;
    let worst = g.values.iter().map(|v| (v - 0.5).abs()).fold(0.0, f64::max);
    Ok(ComparisonReport::new("unscattered-g2", Metric::MaxAbs, worst, tol).with("params", params).with("lags", g.values.len()))
}

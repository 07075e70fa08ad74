//! The Markovian limit of the two-level spectrum.

use std::f64::consts::PI;

use wgfb_core::{markov_effective, symmetric_grid, ModelParams, SpectralResult};

use crate::analytic;
use crate::compare::compare_spectra;
use crate::error::{ValidationError, ValidationResult};
use crate::report::{ComparisonReport, Metric};

/// `γ_eff` below this fraction of `γ` counts as decoupled.
const DECOUPLED: f64 = 1e-9;

/// Markov-limit `S̃(ν)` with the mirror-renormalized `δ_eff` and `γ_eff`.
pub fn markov_spectrum(params: &ModelParams, grid: &[f64]) -> ValidationResult<SpectralResult> {
    let m = markov_effective(params)?;
    let g = params.gamma;
    let q = m.gamma_eff * m.gamma_eff / 4.0;
    let d = m.delta_eff;
    let inelastic = grid
        .iter()
        .map(|&nu| {
            if q == 0.0 {
                return 0.0;
            }
            let a = (nu + d) * (nu + d) + q;
            let b = (nu - d) * (nu - d) + q;
            64.0 * g * g / PI * q / (d * d + q) * q / (a * b)
        })
        .collect();
    Ok(SpectralResult { elastic_weight: None, grid: grid.to_vec(), inelastic, flagged: Vec::new() })
}

/// Position of the positive-frequency maximum and its outer half width at
/// half maximum, both predicted from `(δ_eff, γ_eff)`.
pub fn markov_peak(params: &ModelParams) -> ValidationResult<(f64, f64)> {
    let m = markov_effective(params)?;
    let q = m.gamma_eff * m.gamma_eff / 4.0;
    let d2 = m.delta_eff * m.delta_eff;
    if d2 > q {
        let u = d2 - q;
        let outer = u + 2.0 * d2.sqrt() * q.sqrt();
        Ok((u.sqrt(), outer.sqrt() - u.sqrt()))
    } else {
        let a = d2 + q;
        let u = (d2 - q) + ((q - d2) * (q - d2) + a * a).sqrt();
        Ok((0.0, u.sqrt()))
    }
}

/// Largest sample at `ν ≥ 0` and the distance from it to where the spectrum
/// falls to half of it on the outer side, linearly interpolated.
pub fn measured_peak(s: &SpectralResult) -> ValidationResult<(f64, f64)> {
    let start = s.grid.partition_point(|&nu| nu < 0.0);
    let (i, peak) = (start..s.grid.len())
        .map(|i| (i, s.inelastic[i]))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| ValidationError::PeakNotFound("no samples at ν ≥ 0".into()))?;
    if !(peak > 0.0) {
        return Err(ValidationError::PeakNotFound("spectrum vanishes".into()));
    }
    let half = peak / 2.0;
    let j = (i + 1..s.grid.len())
        .find(|&j| s.inelastic[j] <= half)
        .ok_or_else(|| ValidationError::PeakNotFound("half maximum lies beyond the grid".into()))?;
    let (x0, x1, y0, y1) = (s.grid[j - 1], s.grid[j], s.inelastic[j - 1], s.inelastic[j]);
    let x = x0 + (half - y0) / (y1 - y0) * (x1 - x0);
    Ok((s.grid[i], x - s.grid[i]))
}

/// Grid covering both Lorentzian factors of the Markov spectrum, with at
/// least `points` samples and at least 40 per `γ_eff/2`.
pub fn markov_grid(params: &ModelParams, points: usize) -> ValidationResult<Vec<f64>> {
    let m = markov_effective(params)?;
    if m.gamma_eff <= DECOUPLED * params.gamma {
        return Ok(symmetric_grid(params.gamma, points));
    }
    let span = 4.0 * (m.delta_eff.abs() + m.gamma_eff);
    let resolved = (2.0 * span / (m.gamma_eff / 80.0)).ceil() as usize + 1;
    Ok(symmetric_grid(span, points.max(resolved | 1)))
}

/// Compares the analytic spectrum of a nearly Markovian two-level emitter
/// with the Markov-limit formula: peak position within one grid step,
/// outer HWHM within `hwhm_tol` relative, and relative L2 within `l2_tol`.
pub fn markov_limit_check(params: &ModelParams, points: usize, hwhm_tol: f64, l2_tol: f64) -> ValidationResult<Vec<ComparisonReport>> {
    if !params.emitter.is_two_level() {
        return Err(ValidationError::InvalidInput("the Markov-limit check needs a two-level emitter".into()));
    }
    let m = markov_effective(params)?;
    let grid = markov_grid(params, points)?;
    let step = grid[1] - grid[0];
    let exact = analytic::spectrum(params, &grid)?;
    let markov = markov_spectrum(params, &grid)?;
    let echo = |r: ComparisonReport| r.with("params", params).with("delta_eff", m.delta_eff).with("gamma_eff", m.gamma_eff);

    let shape = echo(compare_spectra(&exact, &markov, l2_tol)?.named("markov-limit-shape"));
    if m.gamma_eff <= DECOUPLED * params.gamma {
        let peak = exact.peak().map_or(0.0, |(_, v)| v);
        return Ok(vec![shape
            .with("exact_peak", peak)
            .with_note("γ_eff = 0: the emitter decouples and the Markov spectrum vanishes; peak checks skipped")]);
    }

    let (nu_pred, hwhm_pred) = markov_peak(params)?;
    let (nu_meas, hwhm_meas) = measured_peak(&exact)?;
    let position = echo(
        ComparisonReport::new("markov-limit-peak", Metric::MaxAbs, (nu_meas - nu_pred).abs(), step)
            .with("predicted", nu_pred)
            .with("measured", nu_meas),
    );
    let width = echo(
        ComparisonReport::new("markov-limit-hwhm", Metric::MaxAbs, (hwhm_meas / hwhm_pred - 1.0).abs(), hwhm_tol)
            .with("predicted", hwhm_pred)
            .with("measured", hwhm_meas)
            .with("gamma_eff_half", m.gamma_eff / 2.0),
    );
    Ok(vec![position, width, shape])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_peak_width_is_squared_lorentzian() {
        let p = ModelParams::two_level(1.0, 1e-3, 0.0, 0.0).unwrap();
        let (nu, w) = markov_peak(&p).unwrap();
        assert_eq!(nu, 0.0);
        assert!((w - 2.0 * (2f64.sqrt() - 1.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn predicted_peak_matches_formula_samples() {
        for phi in [0.0, 1.0, 2.5, 3.0] {
            let p = ModelParams::two_level(1.5, 1e-3, phi, 0.3).unwrap();
            let grid = markov_grid(&p, 20001).unwrap();
            let s = markov_spectrum(&p, &grid).unwrap();
            let (nu, w) = measured_peak(&s).unwrap();
            let (nu_p, w_p) = markov_peak(&p).unwrap();
            let step = grid[1] - grid[0];
            assert!((nu - nu_p).abs() <= step, "φ={phi}");
            assert!((w - w_p).abs() <= 2.0 * step, "φ={phi}: {w} vs {w_p}");
        }
    }

    #[test]
    fn formula_tracks_analytic_at_other_gamma() {
        for phi in [0.0, 2.0] {
            let p = ModelParams::two_level(2.0, 5e-4, phi, 0.6).unwrap();
            let grid = markov_grid(&p, 401).unwrap();
            let exact = analytic::spectrum(&p, &grid).unwrap();
            let r = compare_spectra(&exact, &markov_spectrum(&p, &grid).unwrap(), 0.02).unwrap();
            assert!(r.passed, "φ={phi}: {}", r.value);
        }
    }
}

//! Lifetime of the emitter-mirror cavity read off the decaying `g²`
//! oscillations of a two-level emitter.

use std::f64::consts::PI;

use wgfb_core::{symmetric_grid, ModelParams};

use crate::analytic;
use crate::error::{ValidationError, ValidationResult};
use crate::report::{ComparisonReport, Metric};

/// Oscillations smaller than this count as vanished.
const AMPLITUDE_FLOOR: f64 = 1e-6;

/// Settings of [`cavity_linewidth_check`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CavitySettings {
    /// Allowed factor between the fitted decay time and `t_eff`.
    pub lifetime_factor: f64,
    /// Relative tolerance on the oscillation period.
    pub period_tol: f64,
    /// Samples of `g²` per delay or per oscillation, whichever is shorter.
    pub samples: usize,
    /// Fit window length in units of `t_eff`.
    pub fit_span: f64,
    /// Most oscillations the fit window may hold.
    pub max_oscillations: f64,
}

impl Default for CavitySettings {
    fn default() -> Self {
        Self { lifetime_factor: 2.0, period_tol: 0.1, samples: 200, fit_span: 4.0, max_oscillations: 20.0 }
    }
}

/// `t_eff = τ(1 + (γ/ν)²)`, the lifetime of a cavity whose second mirror
/// is the emitter with reflectivity `1/(1 + (ν/γ)²)`.
pub fn cavity_lifetime(params: &ModelParams, nu: f64) -> f64 {
    params.tau * (1.0 + (params.gamma / nu).powi(2))
}

fn reduced_phase(phi: f64) -> f64 {
    let r = phi.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// Local maximum of `S̃` at `ν > 0` closest to `(π − |φ|)/τ`, refined by
/// golden-section search.
pub fn cavity_peak(params: &ModelParams) -> ValidationResult<f64> {
    let target = (PI - reduced_phase(params.phi).abs()) / params.tau;
    let grid = symmetric_grid(2.0 * PI / params.tau, 801);
    let s = analytic::spectrum(params, &grid)?.inelastic;
    let step = grid[1] - grid[0];
    let best = (1..grid.len() - 1)
        .filter(|&i| grid[i] > 0.0 && s[i] > s[i - 1] && s[i] >= s[i + 1])
        .min_by(|&a, &b| (grid[a] - target).abs().total_cmp(&(grid[b] - target).abs()))
        .ok_or_else(|| ValidationError::PeakNotFound(format!("no spectral maximum at ν > 0 for {params:?}")))?;
    let f = |nu: f64| -> ValidationResult<f64> { Ok(-analytic::spectrum(params, &[nu])?.inelastic[0]) };
    let (mut a, mut b) = (grid[best] - step, grid[best] + step);
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let (mut c, mut d) = (b - r * (b - a), a + r * (b - a));
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > 1e-9 * step.max(1e-300) * 1e3 {
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

/// Fits the decay of the `g²` oscillations after `t = 2τ` and compares it
/// with the cavity lifetime at the spectral peak; also compares the period
/// with `2πτ/(π − |φ|)`.
///
/// The oscillation amplitude is the peak-to-trough height of `g²`, and the
/// fitted time is the decay time of its square, the photon-number lifetime
/// that `t_eff` describes.
pub fn cavity_linewidth_check(params: &ModelParams, settings: &CavitySettings) -> ValidationResult<Vec<ComparisonReport>> {
    if !params.emitter.is_two_level() || !(params.tau > 0.0 && params.gamma > 0.0) {
        return Err(ValidationError::InvalidInput("the cavity check needs a two-level emitter with γ, τ > 0".into()));
    }
    let phi = reduced_phase(params.phi);
    let literal_period = 2.0 * PI * params.tau / (PI - phi.abs());
    let echo = |r: ComparisonReport| r.with("params", params);
    let skipped = |note: String| {
        vec![
            echo(ComparisonReport::new("cavity-lifetime", Metric::MaxAbs, 1.0, settings.lifetime_factor)).with_note(note.clone()),
            echo(ComparisonReport::new("cavity-period", Metric::MaxAbs, 0.0, settings.period_tol)).with_note(note),
        ]
    };
    if PI - phi.abs() < 1e-9 {
        return Ok(skipped("φ = π: the oscillations vanish; check skipped".into()));
    }

    let nu = match cavity_peak(params) {
        Ok(nu) => nu,
        Err(e) => {
            let g = analytic::spectrum(params, &symmetric_grid(2.0 * PI / params.tau, 201))?;
            if g.peak().map_or(0.0, |(_, v)| v) < AMPLITUDE_FLOOR {
                return Ok(skipped("spectrum vanishes: the oscillations vanish; check skipped".into()));
            }
            return Err(e);
        }
    };
    let t_eff = cavity_lifetime(params, nu);
    let start = 2.0 * params.tau;
    let cycle = 2.0 * PI / nu;
    let fit_end = start + (settings.fit_span * t_eff).min(settings.max_oscillations * cycle);
    let end = fit_end + 2.0 * literal_period.max(cycle);
    let h = params.tau.min(cycle) / settings.samples.max(4) as f64;
    let n = ((end - start) / h).ceil() as usize;
    let ts: Vec<f64> = (0..=n).map(|i| start + i as f64 * h).collect();
    let g2 = analytic::g2(params, &ts)?.values;

    let is_max = |i: usize| g2[i] > g2[i - 1] && g2[i] >= g2[i + 1];
    let is_min = |i: usize| g2[i] < g2[i - 1] && g2[i] <= g2[i + 1];
    let maxima: Vec<usize> = (1..n).filter(|&i| is_max(i)).collect();
    let minima: Vec<usize> = (1..n).filter(|&i| is_min(i)).collect();
    // height of each maximum above the mean of the neighbouring minima
    let mut peaks = Vec::new();
    for &i in &maxima {
        let left = minima.iter().rev().find(|&&j| j < i);
        let right = minima.iter().find(|&&j| j > i);
        if let (Some(&l), Some(&r)) = (left, right) {
            let height = g2[i] - 0.5 * (g2[l] + g2[r]);
            if ts[i] <= fit_end {
                peaks.push((ts[i], height));
            }
        }
    }
    if peaks.iter().all(|p| p.1 < AMPLITUDE_FLOOR) {
        return Ok(skipped(format!("oscillation amplitude below {AMPLITUDE_FLOOR}: check skipped")));
    }
    if peaks.len() < 3 {
        return Err(ValidationError::PeakNotFound(format!("only {} g² oscillations in the fit window", peaks.len())));
    }

    // least squares of ln(height²) against t
    let k = peaks.len() as f64;
    let (sx, sy) = peaks.iter().fold((0.0, 0.0), |(a, b), &(t, y)| (a + t, b + 2.0 * y.ln()));
    let (mx, my) = (sx / k, sy / k);
    let (sxy, sxx) = peaks.iter().fold((0.0, 0.0), |(a, b), &(t, y)| (a + (t - mx) * (2.0 * y.ln() - my), b + (t - mx).powi(2)));
    let slope = sxy / sxx;
    let fitted = if slope < 0.0 { -1.0 / slope } else { f64::INFINITY };
    let period = (peaks[peaks.len() - 1].0 - peaks[0].0) / (k - 1.0);

    let lifetime = echo(
        ComparisonReport::new("cavity-lifetime", Metric::MaxAbs, (fitted / t_eff).max(t_eff / fitted), settings.lifetime_factor)
            .with("nu_peak", nu)
            .with("t_eff", t_eff)
            .with("fitted_decay_time", fitted)
            .with("oscillations", peaks.len()),
    );
    let period_report = echo(
        ComparisonReport::new("cavity-period", Metric::MaxAbs, (period / literal_period - 1.0).abs(), settings.period_tol)
            .with("fitted_period", period)
            .with("predicted_period", literal_period)
            .with("period_from_peak", cycle),
    );
    Ok(vec![lifetime, period_report])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lifetime_formula() {
        let p = ModelParams::two_level(1.0, 6.0, 0.0, 0.0).unwrap();
        assert!((cavity_lifetime(&p, 1.0) - 12.0).abs() < 1e-12);
        assert!((reduced_phase(1.5 * PI) + 0.5 * PI).abs() < 1e-12);
    }

    #[test]
    fn peak_refines_grid_maximum() {
        let p = ModelParams::two_level(1.0, 6.0, 0.0, 0.0).unwrap();
        let nu = cavity_peak(&p).unwrap();
        let s = |x: f64| analytic::spectrum(&p, &[x]).unwrap().inelastic[0];
        assert!(s(nu) >= s(nu + 1e-4) && s(nu) >= s(nu - 1e-4));
        assert!((nu - 0.45).abs() < 0.01, "{nu}");
    }

    #[test]
    fn decoupled_phase_is_skipped() {
        let p = ModelParams::two_level(1.0, 6.0, PI, 0.0).unwrap();
        let r = cavity_linewidth_check(&p, &CavitySettings::default()).unwrap();
        assert!(r.iter().all(|r| r.passed && r.note.is_some()));
    }
}

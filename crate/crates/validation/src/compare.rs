//! Spectrum and correlation comparisons.

use wgfb_core::{CorrelationResult, SpectralResult};

use crate::error::{ValidationError, ValidationResult};
use crate::report::{ComparisonReport, Metric};

/// Spectra whose reference never exceeds this are compared by max-abs.
pub const ZERO_SPECTRUM_FLOOR: f64 = 1e-10;

/// Linear interpolation of `(x, y)` at `at`; `x` ascending and `at` inside.
fn interpolate(x: &[f64], y: &[f64], at: f64) -> f64 {
    let k = x.partition_point(|&v| v < at);
    if k == 0 {
        return y[0];
    }
    if k >= x.len() {
        return y[x.len() - 1];
    }
    let (x0, x1) = (x[k - 1], x[k]);
    let w = if x1 > x0 { (at - x0) / (x1 - x0) } else { 0.0 };
    y[k - 1] * (1.0 - w) + y[k] * w
}

/// The points of `a` that fall inside `b`'s range, with `b` interpolated
/// there. Returns whether resampling was needed.
fn align(a_x: &[f64], a_y: &[f64], b_x: &[f64], b_y: &[f64]) -> ValidationResult<(Vec<f64>, Vec<f64>, Vec<f64>, bool)> {
    if a_x.is_empty() || b_x.is_empty() {
        return Err(ValidationError::InvalidInput("empty grid".into()));
    }
    if a_x == b_x {
        return Ok((a_x.to_vec(), a_y.to_vec(), b_y.to_vec(), false));
    }
    let (lo, hi) = (b_x[0], b_x[b_x.len() - 1]);
    let mut x = Vec::new();
    let mut ya = Vec::new();
    let mut yb = Vec::new();
    for (&xi, &yi) in a_x.iter().zip(a_y) {
        if xi >= lo && xi <= hi {
            x.push(xi);
            ya.push(yi);
            yb.push(interpolate(b_x, b_y, xi));
        }
    }
    if x.is_empty() {
        return Err(ValidationError::GridMismatch { a_lo: a_x[0], a_hi: a_x[a_x.len() - 1], b_lo: lo, b_hi: hi });
    }
    Ok((x, ya, yb, true))
}

/// `‖a − b‖₂ / ‖b‖₂`.
pub fn relative_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

/// Relative L2 distance of `a` from the reference `b` over the shared grid.
/// `b` is resampled onto `a`'s grid when they differ (noted in the report).
/// A reference that vanishes everywhere is compared by max-abs against
/// [`ZERO_SPECTRUM_FLOOR`].
pub fn compare_spectra(a: &SpectralResult, b: &SpectralResult, tol: f64) -> ValidationResult<ComparisonReport> {
    let (x, ya, yb, resampled) = align(&a.grid, &a.inelastic, &b.grid, &b.inelastic)?;
    let peak = yb.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut report = if peak <= ZERO_SPECTRUM_FLOOR {
        let d = ya.iter().zip(&yb).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
        ComparisonReport::new("spectrum", Metric::MaxAbs, d, ZERO_SPECTRUM_FLOOR).with_note("reference spectrum vanishes")
    } else {
        ComparisonReport::new("spectrum", Metric::RelativeL2, relative_l2(&ya, &yb), tol)
    };
    report = report.with("points", x.len()).with("nu_min", x[0]).with("nu_max", x[x.len() - 1]).with("reference_peak", peak);
    if resampled {
        report = report.with_note("reference resampled onto the compared grid by linear interpolation");
    }
    Ok(report)
}

/// Largest `|a − b|` over grid points with `t ≤ t_max`, `b` the reference.
pub fn compare_correlations(a: &CorrelationResult, b: &CorrelationResult, t_max: f64, tol: f64) -> ValidationResult<ComparisonReport> {
    let (x, ya, yb, resampled) = align(&a.grid, &a.values, &b.grid, &b.values)?;
    let mut worst = (0.0f64, x[0]);
    let mut points = 0usize;
    for ((&t, p), q) in x.iter().zip(&ya).zip(&yb) {
        if t > t_max {
            continue;
        }
        points += 1;
        let d = (p - q).abs();
        if !(d <= worst.0) {
            worst = (d, t);
        }
    }
    if points == 0 {
        return Err(ValidationError::InvalidInput(format!("no grid points with t ≤ {t_max}")));
    }
    let mut report = ComparisonReport::new("g2", Metric::Pointwise, worst.0, tol).with("worst_t", worst.1).with("points", points).with("t_max", t_max);
    if resampled {
        report = report.with_note("reference resampled onto the compared grid by linear interpolation");
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec(grid: Vec<f64>, f: impl Fn(f64) -> f64) -> SpectralResult {
        let inelastic = grid.iter().map(|&x| f(x)).collect();
        SpectralResult { elastic_weight: None, grid, inelastic, flagged: Vec::new() }
    }

    #[test]
    fn identical_inputs_pass_with_zero() {
        let a = spec((0..11).map(|i| i as f64 * 0.1).collect(), |x| (-x * x).exp());
        let r = compare_spectra(&a, &a, 0.05).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.passed);
        assert_eq!(r.metric, Metric::RelativeL2);
    }

    #[test]
    fn resamples_linear_reference_exactly() {
        let a = spec(vec![0.05, 0.35, 0.8], |x| 2.0 * x + 1.0);
        let b = spec((0..11).map(|i| i as f64 * 0.1).collect(), |x| 2.0 * x + 1.0);
        let r = compare_spectra(&a, &b, 1e-12).unwrap();
        assert!(r.value < 1e-15);
        assert!(r.note.is_some());
    }

    #[test]
    fn disjoint_grids_are_an_error() {
        let a = spec(vec![0.0, 1.0], |_| 1.0);
        let b = spec(vec![2.0, 3.0], |_| 1.0);
        assert!(matches!(compare_spectra(&a, &b, 0.1), Err(ValidationError::GridMismatch { .. })));
    }

    #[test]
    fn zero_reference_uses_max_abs() {
        let a = spec(vec![0.0, 1.0], |_| 1e-12);
        let b = spec(vec![0.0, 1.0], |_| 0.0);
        let r = compare_spectra(&a, &b, 0.05).unwrap();
        assert_eq!(r.metric, Metric::MaxAbs);
        assert!(r.passed);
    }

    #[test]
    fn correlation_window_respected() {
        let grid: Vec<f64> = (0..21).map(|i| i as f64 * 0.5).collect();
        let a = CorrelationResult { grid: grid.clone(), values: grid.iter().map(|&t| if t > 5.0 { 9.0 } else { 0.5 }).collect(), delay_marks: vec![], flagged: vec![] };
        let b = CorrelationResult { grid: grid.clone(), values: vec![0.51; 21], delay_marks: vec![], flagged: vec![] };
        let r = compare_correlations(&a, &b, 5.0, 0.02).unwrap();
        assert!((r.value - 0.01).abs() < 1e-12);
        assert!(r.passed);
    }

    proptest! {
        #[test]
        fn relative_l2_scales(c in 0.1f64..10.0, e in 0.0f64..0.5) {
            let b: Vec<f64> = (0..20).map(|i| (i as f64).sin() + 2.0).collect();
            let a: Vec<f64> = b.iter().map(|v| v * (1.0 + e)).collect();
            let ac: Vec<f64> = a.iter().map(|v| v * c).collect();
            let bc: Vec<f64> = b.iter().map(|v| v * c).collect();
            prop_assert!((relative_l2(&a, &b) - e).abs() < 1e-12);
            prop_assert!((relative_l2(&ac, &bc) - e).abs() < 1e-12);
        }
    }
}

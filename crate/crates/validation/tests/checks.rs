use std::f64::consts::PI;

use wgfb_core::{symmetric_grid, tls, ModelParams};
use wgfb_validate::markov::{markov_peak, measured_peak};
use wgfb_validate::*;

#[test]
fn analytic_matches_closed_form_through_compare() {
    let p = ModelParams::two_level(1.0, 1.0, 0.0, 0.0).unwrap();
    let grid = symmetric_grid(2.0 * PI, 201);
    let a = tls::inelastic_spectrum(&grid, &p).unwrap();
    let mut b = a.clone();
    b.inelastic = grid.iter().map(|&nu| tls::closed_form_phi0(nu, &p).unwrap()).collect();
    let r = compare_spectra(&a, &b, 1e-8).unwrap();
    assert!(r.passed && r.value < 1e-12, "{}", r.value);
}

#[test]
fn markov_single_peak_width() {
    // γ_eff = 4γ at φ = 0; a squared Lorentzian of half width 2γ has HWHM
    // 2γ·√(√2 − 1)
    let p = ModelParams::two_level(1.0, 1e-3, 0.0, 0.0).unwrap();
    let (nu, w) = markov_peak(&p).unwrap();
    assert_eq!(nu, 0.0);
    assert!((w - 2.0 * (2f64.sqrt() - 1.0).sqrt()).abs() < 1e-12);
    let s = markov_spectrum(&p, &symmetric_grid(10.0, 20001)).unwrap();
    let (_, measured) = measured_peak(&s).unwrap();
    assert!((measured - w).abs() < 1e-3);
}

#[test]
fn markov_split_peaks_follow_effective_detuning() {
    // φ = 2.5: δ_eff = −γ sin 2.5, γ_eff = 2γ(1 + cos 2.5)
    let p = ModelParams::two_level(1.0, 1e-3, 2.5, 0.0).unwrap();
    let reports = markov_limit_check(&p, 801, 0.05, 0.05).unwrap();
    assert!(reports.iter().all(|r| r.passed), "{reports:?}");
    let d: f64 = 2.5f64.sin();
    let q: f64 = (1.0 + 2.5f64.cos()).powi(2);
    let predicted = reports[0].metadata["predicted"].as_f64().unwrap();
    assert!((predicted - (d * d - q).sqrt()).abs() < 1e-12);
}

#[test]
fn markov_decoupled_phase_vanishes() {
    let p = ModelParams::two_level(1.0, 1e-3, PI, 0.0).unwrap();
    let reports = markov_limit_check(&p, 801, 0.05, 0.05).unwrap();
    assert_eq!(reports.len(), 1);
    assert!(reports[0].passed && reports[0].note.is_some());
}

#[test]
fn cavity_lifetime_within_factor_two() {
    for phi in [0.0, PI / 4.0] {
        let p = ModelParams::two_level(1.0, 6.0, phi, 0.0).unwrap();
        let r = cavity_linewidth_check(&p, &CavitySettings::default()).unwrap();
        assert!(r[0].passed, "φ = {phi}: {:?}", r[0]);
    }
}

#[test]
fn cavity_period_follows_spectral_peak() {
    // the oscillation period is 2π/ν_peak; the round-trip estimate
    // 2πτ/(π − |φ|) approaches it as γτ grows
    let mut literal = Vec::new();
    for tau in [6.0, 20.0] {
        let p = ModelParams::two_level(1.0, tau, 0.0, 0.0).unwrap();
        let r = cavity_linewidth_check(&p, &CavitySettings::default()).unwrap();
        let fitted = r[1].metadata["fitted_period"].as_f64().unwrap();
        let from_peak = r[1].metadata["period_from_peak"].as_f64().unwrap();
        assert!((fitted / from_peak - 1.0).abs() < 0.02, "γτ = {tau}: {fitted} vs {from_peak}");
        literal.push(r[1].value);
    }
    assert!(literal[1] < literal[0]);
    assert!(literal[1] <= 0.1, "{literal:?}");
}

#[test]
fn v_zero_sits_on_hyperbola_at_markov_delay() {
    let p = ModelParams::chiral_v(1.0, 1e-3, 0.0, 0.4, 0.4).unwrap();
    let r = v_markov_zero_locus(&p, 1e-8).unwrap();
    let found = r.metadata["minimum_nu"].as_f64().unwrap();
    assert!((found - (0.25f64 + 0.16).sqrt()).abs() < 2e-3, "{found}");
    assert!(r.metadata["minimum_relative"].as_f64().unwrap() < 1e-6);
}

#[test]
fn strong_drive_breaks_weak_scaling() {
    let p = ModelParams::two_level(1.0, 1.0, 0.0, 0.0).unwrap();
    let s = DriveSettings::new(MpsSettings::new(0.1, 20.0, 32));
    let out = weak_drive_scaling(&p, &[0.5, 1.0], &s).unwrap();
    let exponent = out.reports.iter().find(|r| r.check == "weak-drive-exponent").unwrap();
    assert!(!exponent.passed, "{exponent:?}");
}

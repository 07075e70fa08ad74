use proptest::prelude::*;
use wgfb_core::{symmetric_grid, tls, vlevel, ModelParams};

#[test]
fn g2_decorrelates_at_long_times() {
    // a flat two-photon packet has g² = ½ once the photons are uncorrelated
    let cases = [
        ModelParams::two_level(1.0, 1.0, 0.0, 0.0).unwrap(),
        ModelParams::two_level(1.0, 0.0, 0.3, 0.2).unwrap(),
        ModelParams::chiral_v(1.0, 1.0, 0.0, 0.2, 0.2).unwrap(),
    ];
    for p in cases {
        let g = if p.emitter.is_two_level() { tls::g2(&[60.0], &p) } else { vlevel::g2_v(&[60.0], &p) }.unwrap();
        assert!((g.values[0] - 0.5).abs() < 1e-8, "{p:?}: {}", g.values[0]);
    }
}

#[test]
fn vanishing_delay_is_continuous() {
    let grid = [0.3, 1.0, 2.5];
    let at = |tau| ModelParams::two_level(1.0, tau, 0.4, 0.1).unwrap();
    let a = tls::inelastic_spectrum(&grid, &at(1e-7)).unwrap();
    let b = tls::inelastic_spectrum(&grid, &at(0.0)).unwrap();
    for (x, y) in a.inelastic.iter().zip(&b.inelastic) {
        assert!((x / y - 1.0).abs() < 1e-5, "{x} {y}");
    }
    let a = tls::g2(&[0.3, 1.0], &at(1e-5)).unwrap();
    let b = tls::g2(&[0.3, 1.0], &at(0.0)).unwrap();
    for (x, y) in a.values.iter().zip(&b.values) {
        assert!((x - y).abs() < 1e-4, "{x} {y}");
    }
}

#[test]
fn decoupled_phase_has_no_inelastic_output() {
    let p = ModelParams::two_level(1.0, 0.0, std::f64::consts::PI, 0.0).unwrap();
    let s = tls::inelastic_spectrum(&symmetric_grid(5.0, 51), &p).unwrap();
    assert!(s.inelastic.iter().all(|v| v.abs() < 1e-20));
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn spectra_are_finite_and_non_negative(tau in 0.0..8.0f64, phi in 0.0..6.28f64, delta in -2.0..2.0f64, v in any::<bool>()) {
        let grid = symmetric_grid(4.0, 41);
        let s = if v {
            vlevel::inelastic_spectrum_v(&grid, &ModelParams::chiral_v(1.0, tau, phi, delta, delta).unwrap())
        } else {
            tls::inelastic_spectrum(&grid, &ModelParams::two_level(1.0, tau, phi, delta).unwrap())
        }
        .unwrap();
        for (i, x) in s.inelastic.iter().enumerate() {
            prop_assert!(s.flagged.contains(&i) || (x.is_finite() && *x >= 0.0), "S̃({}) = {x}", grid[i]);
        }
    }

    #[test]
    fn spectrum_scales_with_units(tau in 0.1..5.0f64, phi in 0.0..6.28f64, delta in -1.0..1.0f64, k in 0.5..4.0f64) {
        // S̃ is normalized by γ so it only depends on dimensionless ratios
        let a = ModelParams::two_level(1.0, tau, phi, delta).unwrap();
        let b = ModelParams::two_level(k, tau / k, phi, delta * k).unwrap();
        let x = tls::inelastic_spectrum(&[0.7], &a).unwrap().inelastic[0];
        let y = tls::inelastic_spectrum(&[0.7 * k], &b).unwrap().inelastic[0];
        prop_assert!((y / x - 1.0).abs() < 1e-8 || x < 1e-12, "{x} {y}");
    }
}

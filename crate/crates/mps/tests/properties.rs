use proptest::prelude::*;
use wgfb_core::ModelParams;
use wgfb_mps::{build_two_photon_mps, checkpoint, populations, run_scattering, Evolution, MpsConfig};

fn setup(tau: f64, phi: f64, delta: f64, v: bool) -> (MpsConfig, ModelParams) {
    let p = if v {
        ModelParams::chiral_v(1.0, tau, phi, delta, -delta).unwrap()
    } else {
        ModelParams::two_level(1.0, tau, phi, delta).unwrap()
    };
    let (mut c, s) = MpsConfig::new(&p, 0.1, 10.0, 16).unwrap();
    c.trunc_threshold = 1e-10;
    (c, s)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 4, ..ProptestConfig::default() })]

    #[test]
    fn scattering_conserves_norm_and_photons(tau in 0.2..1.0f64, phi in 0.0..2.0f64, delta in -1.0..1.0f64, v in any::<bool>()) {
        let (c, p) = setup(tau, phi, delta, v);
        let (out, diag) = run_scattering(build_two_photon_mps(&c, &p).unwrap(), &p, &c, None).unwrap();
        let cum = diag.cumulative_discarded;
        prop_assert!((1.0 - diag.norm * diag.norm).abs() <= cum + 1e-10, "norm {} discarded {cum}", diag.norm);
        let pops = populations(&out);
        let excited: f64 = pops.emitter[1..].iter().sum();
        prop_assert!((pops.total_photons + excited - 2.0).abs() <= 2.0 * cum + 1e-8, "N = {}", pops.total_photons + excited);
        // away from the trapping phase the emitter relaxes during the tail
        prop_assert!(excited < 1e-3, "excited population {excited}");
    }
}

#[test]
fn checkpoint_resume_matches_uninterrupted_run() {
    let (mut c, p) = setup(0.5, 0.7, 0.3, false);
    c.tail_bins = 10;
    let ev = Evolution::new(&p, &c, None).unwrap();
    let mut straight = build_two_photon_mps(&c, &p).unwrap();
    let mut resumed = straight.clone();
    for _ in 0..c.total_steps() {
        ev.step(&mut straight).unwrap();
    }
    for _ in 0..37 {
        ev.step(&mut resumed).unwrap();
    }
    let mut resumed = checkpoint::decode(&checkpoint::encode(&resumed)).unwrap();
    while resumed.steps_done() < c.total_steps() {
        ev.step(&mut resumed).unwrap();
    }
    assert_eq!(checkpoint::encode(&straight), checkpoint::encode(&resumed));
}

fn small_checkpoint() -> Vec<u8> {
    let (mut c, p) = setup(0.3, 0.0, 0.0, true);
    c.tail_bins = 0;
    let ev = Evolution::new(&p, &c, None).unwrap();
    let mut s = build_two_photon_mps(&c, &p).unwrap();
    for _ in 0..5 {
        ev.step(&mut s).unwrap();
    }
    checkpoint::encode(&s)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, ..ProptestConfig::default() })]

    #[test]
    fn decode_never_panics_on_noise(bytes in proptest::collection::vec(any::<u8>(), 0..512)) {
        let _ = checkpoint::decode(&bytes);
    }

    #[test]
    fn decode_never_panics_on_mutations(edits in proptest::collection::vec((any::<prop::sample::Index>(), any::<u8>()), 1..8), cut in any::<prop::sample::Index>()) {
        let mut bytes = small_checkpoint();
        for (i, b) in edits {
            let at = i.index(bytes.len());
            bytes[at] = b;
        }
        let _ = checkpoint::decode(&bytes);
        bytes.truncate(cut.index(bytes.len()));
        prop_assert!(checkpoint::decode(&bytes).is_err());
    }
}

//! Parameter sets of the reference figures. Values a figure does not state
//! are marked as assumptions.

use std::f64::consts::PI;

use wgfb_validate::MpsSettings;

use crate::config::{
    DriveSection, EmitterName, Engine, Grids, ModelSection, OutputSection, RunConfig, Sweep, SweepParameter, ValidationSection,
};

pub const PRESETS: &[&str] = &["fig2a", "fig2b", "fig3a", "fig4a", "fig5a", "fig6a"];

fn model(emitter: EmitterName, tau: f64, phi: f64, delta: f64) -> ModelSection {
    let (d, d1, d2) = match emitter {
        EmitterName::TwoLevel => (Some(delta), None, None),
        EmitterName::ChiralV => (None, Some(delta), Some(delta)),
    };
    ModelSection { emitter, gamma: 1.0, tau, phi, delta: d, delta1: d1, delta2: d2 }
}

fn analytic(model: ModelSection, sweep: Sweep, nu: f64) -> RunConfig {
    RunConfig {
        model,
        engine: Engine::Analytic,
        mps: None,
        drive: None,
        grids: Grids { nu_min: -nu, nu_max: nu, nu_points: 601, t_max: 20.0, t_points: 401 },
        output: OutputSection::default(),
        sweep: Some(sweep),
        validation: ValidationSection::default(),
    }
}

pub fn preset(name: &str) -> Option<RunConfig> {
    let sweep = |parameter, values: &[f64]| Sweep { parameter, values: values.to_vec() };
    Some(match name {
        // two-level emitter in front of the mirror, φ = 0, δ = 0
        "fig2a" => analytic(model(EmitterName::TwoLevel, 1.0, 0.0, 0.0), sweep(SweepParameter::Tau, &[0.0, 1.0, 3.0, 6.0]), 3.0),
        // assumed φ = π/4
        "fig2b" => analytic(model(EmitterName::TwoLevel, 1.0, PI / 4.0, 0.0), sweep(SweepParameter::Tau, &[0.0, 1.0, 3.0, 6.0]), 3.0),
        // Markovian delay; assumed phases
        "fig3a" => analytic(
            model(EmitterName::TwoLevel, 1e-3, 0.0, 0.0),
            sweep(SweepParameter::Phi, &[0.0, PI / 2.0, 3.0 * PI / 4.0, PI]),
            6.0,
        ),
        // V-level, assumed δ = 0.4γ
        "fig4a" => analytic(model(EmitterName::ChiralV, 1.0, 0.0, 0.4), sweep(SweepParameter::Tau, &[1e-3, 0.3, 1.0, 5.0]), 3.0),
        "fig5a" => analytic(model(EmitterName::ChiralV, 1e-3, 0.0, 0.0), sweep(SweepParameter::Delta, &[0.0, 1.0]), 3.0),
        // coherent drive, γτ = 1, φ = 0; assumed drive strengths
        "fig6a" => RunConfig {
            engine: Engine::Mps,
            mps: Some(MpsSettings::new(0.1, 40.0, 64)),
            drive: Some(DriveSection { beta: None, rabi: Some(0.1) }),
            ..analytic(model(EmitterName::TwoLevel, 1.0, 0.0, 0.0), sweep(SweepParameter::Rabi, &[0.1, 0.5, 1.0]), 4.0)
        },
        _ => return None,
    })
}

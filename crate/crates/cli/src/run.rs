//! Executes the runs of a config.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use wgfb_core::{CorrelationResult, EmitterKind, ModelParams, SpectralResult};
use wgfb_validate::{
    analytic, cavity_linewidth_check, closed_form_consistency, compare_correlations, compare_spectra, elastic_unitarity, markov_limit_check,
    run_coherent, run_two_photon, spectrum_symmetry, CavitySettings, ComparisonReport, DriveSettings, MpsObservables,
};

use crate::config::{Check, Engine, RunConfig, RunPoint};
use crate::error::CliResult;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineTag {
    Analytic,
    Mps,
}

impl EngineTag {
    pub fn as_str(self) -> &'static str {
        match self {
            EngineTag::Analytic => "analytic",
            EngineTag::Mps => "mps",
        }
    }
}

/// What one run resolved to, echoed into the output headers.
#[derive(Clone, Debug, Serialize)]
pub struct RunEcho {
    pub run: usize,
    pub params: ModelParams,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rabi: Option<f64>,
    /// Delay after snapping to the MPS bin grid.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snapped_tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trunc_threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_bond_reached: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cumulative_discarded: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub echo: RunEcho,
    pub spectra: Vec<(EngineTag, SpectralResult)>,
    pub g2: Vec<(EngineTag, CorrelationResult)>,
    pub reports: Vec<ComparisonReport>,
}

/// Runs every sweep point, concurrently, in sweep order.
pub fn execute(config: &RunConfig) -> CliResult<Vec<RunOutput>> {
    config.validate()?;
    let points = config.points()?;
    points.par_iter().map(|p| execute_point(config, p)).collect()
}

fn run_mps(config: &RunConfig, point: &RunPoint, nu: &[f64], t_max: f64) -> CliResult<MpsObservables> {
    let settings = config.mps.expect("validated: mps section present");
    let p = &point.params;
    Ok(match point.rabi {
        Some(r) => {
            // two-photon weights scale as Ω⁴; keep the truncation below them
            let s = DriveSettings::new(settings).mps_for(r);
            run_coherent(p, &s, Complex64::new(r * p.gamma, 0.0), nu, t_max)?
        }
        None => run_two_photon(p, &settings, nu, t_max)?,
    })
}

pub fn execute_point(config: &RunConfig, point: &RunPoint) -> CliResult<RunOutput> {
    let gamma = point.params.gamma;
    let nu = config.grids.nu(gamma);
    let t_max = config.grids.t_max / gamma;
    let mut echo = RunEcho {
        run: point.index,
        params: point.params,
        rabi: point.rabi,
        snapped_tau: None,
        dt: None,
        trunc_threshold: None,
        max_bond_reached: None,
        cumulative_discarded: None,
    };
    let mut spectra = Vec::new();
    let mut g2 = Vec::new();
    let mut reports = Vec::new();

    let mps = if config.engine == Engine::Analytic { None } else { Some(run_mps(config, point, &nu, t_max)?) };
    // analytic results at the snapped delay when both engines run
    let params = mps.as_ref().map_or(point.params, |m| m.params);
    if let Some(m) = &mps {
        echo.snapped_tau = Some(m.params.tau);
        echo.dt = Some(m.config.dt);
        echo.trunc_threshold = Some(m.config.trunc_threshold);
        echo.max_bond_reached = Some(m.diagnostics.max_bond);
        echo.cumulative_discarded = Some(m.diagnostics.cumulative_discarded);
    }
    if config.engine != Engine::Mps {
        let s = analytic::spectrum(&params, &nu)?;
        let t_grid = match &mps {
            Some(m) => m.g2.grid.clone(),
            None => config.grids.t(gamma),
        };
        let c = analytic::g2(&params, &t_grid)?;
        spectra.push((EngineTag::Analytic, s));
        g2.push((EngineTag::Analytic, c));
    }
    if let Some(m) = mps {
        spectra.push((EngineTag::Mps, m.spectrum));
        g2.push((EngineTag::Mps, m.g2));
    }

    if config.engine == Engine::Both {
        let v = &config.validation;
        reports.push(compare_spectra(&spectra[1].1, &spectra[0].1, v.spectrum_tol)?.named("cross-engine-spectrum"));
        let mut reference = g2[0].1.clone();
        let name = if point.rabi.is_some() {
            // weak-drive limit: g²_coh = 2 g²
            reference.values.iter_mut().for_each(|x| *x *= 2.0);
            "cross-engine-g2-weak-drive"
        } else {
            "cross-engine-g2"
        };
        reports.push(compare_correlations(&g2[1].1, &reference, t_max, v.g2_tol)?.named(name));
    }
    for check in &config.validation.checks {
        reports.extend(run_check(*check, &params, &nu)?);
    }
    let reports = reports.into_iter().map(|r| r.with("run", point.index).with("params", params)).collect();
    Ok(RunOutput { echo, spectra, g2, reports })
}

fn run_check(check: Check, p: &ModelParams, nu: &[f64]) -> CliResult<Vec<ComparisonReport>> {
    let two_level = p.emitter.is_two_level();
    Ok(match check {
        Check::ClosedForm => {
            let applies = match p.emitter {
                EmitterKind::TwoLevel { delta } => delta == 0.0 && p.phi == 0.0,
                EmitterKind::ChiralV { delta1, delta2 } => delta1 == 0.0 && delta2 == 0.0,
            };
            if applies && p.tau > 0.0 {
                vec![closed_form_consistency(p, 200, 1e-8)?]
            } else {
                Vec::new()
            }
        }
        Check::MarkovLimit if two_level => markov_limit_check(p, 801, 0.05, 0.05)?,
        Check::Cavity if two_level && p.tau > 0.0 && p.gamma > 0.0 => cavity_linewidth_check(p, &CavitySettings::default())?,
        Check::Symmetry => {
            let positive: Vec<f64> = nu.iter().copied().filter(|&x| x > 0.0).collect();
            vec![spectrum_symmetry(p, &positive, 1e-10)?]
        }
        Check::Unitarity => vec![elastic_unitarity(p, 1e-12)?],
        _ => Vec::new(),
    })
}

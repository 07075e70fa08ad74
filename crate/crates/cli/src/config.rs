//! The run configuration and its validation.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use wgfb_core::{EmitterKind, ModelParams};
use wgfb_validate::MpsSettings;

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmitterName {
    TwoLevel,
    ChiralV,
}

/// Flat model section; `delta` for the two-level emitter, `delta1` and
/// `delta2` for the V-level one. Frequencies and times share one unit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub emitter: EmitterName,
    #[serde(default = "one")]
    pub gamma: f64,
    pub tau: f64,
    #[serde(default)]
    pub phi: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta2: Option<f64>,
}

fn one() -> f64 {
    1.0
}

impl ModelSection {
    pub fn params(&self) -> CliResult<ModelParams> {
        let emitter = match self.emitter {
            EmitterName::TwoLevel => {
                if self.delta1.is_some() || self.delta2.is_some() {
                    return Err(CliError::Config("a two_level emitter takes `delta`, not `delta1`/`delta2`".into()));
                }
                EmitterKind::TwoLevel { delta: self.delta.unwrap_or(0.0) }
            }
            EmitterName::ChiralV => {
                if self.delta.is_some() {
                    return Err(CliError::Config("a chiral_v emitter takes `delta1` and `delta2`, not `delta`".into()));
                }
                EmitterKind::ChiralV { delta1: self.delta1.unwrap_or(0.0), delta2: self.delta2.unwrap_or(0.0) }
            }
        };
        Ok(ModelParams::new(emitter, self.gamma, self.tau, self.phi)?)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    #[default]
    Analytic,
    Mps,
    /// Both engines plus a comparison report per run.
    Both,
}

/// Coherent drive, either as the input amplitude `β = [re, im]` or as the
/// Rabi frequency `Ω_R/γ` (real).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rabi: Option<f64>,
}

/// Frequencies in units of `γ`, times in units of `1/γ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Grids {
    pub nu_min: f64,
    pub nu_max: f64,
    pub nu_points: usize,
    pub t_max: f64,
    pub t_points: usize,
}

impl Default for Grids {
    fn default() -> Self {
        Self { nu_min: -5.0, nu_max: 5.0, nu_points: 401, t_max: 10.0, t_points: 201 }
    }
}

impl Grids {
    pub fn nu(&self, gamma: f64) -> Vec<f64> {
        linspace(self.nu_min, self.nu_max, self.nu_points).into_iter().map(|x| x * gamma).collect()
    }

    pub fn t(&self, gamma: f64) -> Vec<f64> {
        linspace(0.0, self.t_max, self.t_points).into_iter().map(|x| x / gamma).collect()
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub format: Format,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), format: Format::Csv }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Tau,
    Phi,
    Delta,
    Rabi,
}

/// One run per value, each replacing `parameter` in the model or drive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

/// Formula-level checks run on every point where they apply.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    ClosedForm,
    MarkovLimit,
    Cavity,
    Symmetry,
    Unitarity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidationSection {
    pub spectrum_tol: f64,
    pub g2_tol: f64,
    pub checks: Vec<Check>,
}

impl Default for ValidationSection {
    fn default() -> Self {
        Self { spectrum_tol: 0.05, g2_tol: 0.02, checks: Vec::new() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    #[serde(default)]
    pub engine: Engine,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mps: Option<MpsSettings>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drive: Option<DriveSection>,
    #[serde(default)]
    pub grids: Grids,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
    #[serde(default)]
    pub validation: ValidationSection,
}

/// Parses and validates a JSON config.
pub fn parse_config(bytes: &[u8]) -> CliResult<RunConfig> {
    let config: RunConfig = serde_json::from_slice(bytes)?;
    config.validate()?;
    Ok(config)
}

/// One resolved run of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunPoint {
    pub index: usize,
    pub params: ModelParams,
    /// `Ω_R/γ` of the drive, if any.
    pub rabi: Option<f64>,
}

impl RunConfig {
    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: &str| Err(CliError::Config(m.into()));
        let g = &self.grids;
        if !(g.nu_min.is_finite() && g.nu_max.is_finite() && g.nu_min < g.nu_max) || g.nu_points < 2 {
            return bad("grids need finite nu_min < nu_max and nu_points ≥ 2");
        }
        if !(g.t_max.is_finite() && g.t_max > 0.0) || g.t_points < 2 {
            return bad("grids need t_max > 0 and t_points ≥ 2");
        }
        if g.nu_points > 1_000_000 || g.t_points > 1_000_000 {
            return bad("grids are limited to 10⁶ points");
        }
        if !(self.validation.spectrum_tol >= 0.0 && self.validation.g2_tol >= 0.0) {
            return bad("validation tolerances must be non-negative");
        }
        if self.engine != Engine::Analytic && self.mps.is_none() {
            return bad("the mps engine needs an `mps` section");
        }
        if let Some(d) = &self.drive {
            match (d.beta, d.rabi) {
                (Some(_), Some(_)) | (None, None) => return bad("drive takes exactly one of `beta` and `rabi`"),
                _ => {}
            }
            if self.engine == Engine::Analytic {
                return bad("a drive needs the mps engine; the analytic engines cover the two-photon sector only");
            }
        }
        if let Some(s) = &self.sweep {
            if s.values.is_empty() || s.values.len() > 10_000 {
                return bad("a sweep needs between 1 and 10⁴ values");
            }
            if s.parameter == SweepParameter::Rabi && self.engine == Engine::Analytic {
                return bad("a rabi sweep needs the mps engine");
            }
        }
        self.points()?;
        Ok(())
    }

    /// The runs of this config in sweep order.
    pub fn points(&self) -> CliResult<Vec<RunPoint>> {
        let base = self.model.params()?;
        let base_rabi = match &self.drive {
            Some(DriveSection { beta: Some(b), .. }) => {
                if !(b[0].is_finite() && b[1].is_finite()) {
                    return Err(CliError::Config("beta must be finite".into()));
                }
                // Ω_R = β*√γ; the runs take a real Rabi frequency
                if b[1] != 0.0 {
                    return Err(CliError::Config("beta must be real; its phase only rotates the output".into()));
                }
                Some(b[0] * base.gamma.sqrt() / base.gamma)
            }
            Some(DriveSection { rabi: Some(r), .. }) => Some(*r),
            _ => None,
        };
        let mut out = Vec::new();
        let values = self.sweep.as_ref().map_or(vec![f64::NAN], |s| s.values.clone());
        for (index, v) in values.into_iter().enumerate() {
            let mut params = base;
            let mut rabi = base_rabi;
            if let Some(s) = &self.sweep {
                match s.parameter {
                    SweepParameter::Tau => params = params.with_tau(v)?,
                    SweepParameter::Phi => params = params.with_phi(v)?,
                    SweepParameter::Delta => {
                        let emitter = match params.emitter {
                            EmitterKind::TwoLevel { .. } => EmitterKind::TwoLevel { delta: v },
                            EmitterKind::ChiralV { .. } => EmitterKind::ChiralV { delta1: v, delta2: v },
                        };
                        params = ModelParams::new(emitter, params.gamma, params.tau, params.phi)?;
                    }
                    SweepParameter::Rabi => rabi = Some(v),
                }
            }
            if let Some(r) = rabi {
                if !(r.is_finite() && r > 0.0) {
                    return Err(CliError::Config(format!("Rabi frequency must be positive, got {r}")));
                }
            }
            if self.engine != Engine::Analytic && !(params.gamma > 0.0 && params.tau > 0.0) {
                return Err(CliError::Config(format!("the mps engine needs γ > 0 and τ > 0, got γ = {}, τ = {}", params.gamma, params.tau)));
            }
            out.push(RunPoint { index, params, rabi });
        }
        Ok(out)
    }
}

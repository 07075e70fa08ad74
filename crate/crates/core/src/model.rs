//! Physical parameters of the emitter-mirror system and the Markovian
//! effective quantities derived from them.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("decay rate must be finite and non-negative, got {0}")]
    InvalidGamma(f64),

    #[error("delay must be finite and non-negative, got {0}")]
    InvalidTau(f64),

    #[error("{name} must be finite, got {value}")]
    NonFinite { name: &'static str, value: f64 },

    #[error("operation requires a two-level emitter")]
    NotTwoLevel,

    #[error("operation requires a chiral V-level emitter")]
    NotChiralV,
}

/// Level structure of the emitter together with its detunings
/// `δ_χ = ω̄ − ω_χ` from the rotating frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EmitterKind {
    /// `σ₁ = σ₂ = |g⟩⟨e|`.
    TwoLevel { delta: f64 },
    /// `σ₁ = |g⟩⟨e₁|` couples towards the mirror, `σ₂ = |g⟩⟨e₂|` away from it.
    ChiralV { delta1: f64, delta2: f64 },
}

impl EmitterKind {
    pub fn is_two_level(&self) -> bool {
        matches!(self, EmitterKind::TwoLevel { .. })
    }

    /// Local Hilbert-space dimension of the emitter.
    pub fn dim(&self) -> usize {
        match self {
            EmitterKind::TwoLevel { .. } => 2,
            EmitterKind::ChiralV { .. } => 3,
        }
    }
}

/// Frequencies (`γ`, detunings) and times (`τ`) share one unit system;
/// with `γ = 1` they are the dimensionless `ν/γ` and `γt` used for output.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub emitter: EmitterKind,
    pub gamma: f64,
    pub tau: f64,
    /// Feedback phase `φ = ω̄τ + π`, reduced to `[0, 2π)`.
    pub phi: f64,
}

impl ModelParams {
    pub fn new(emitter: EmitterKind, gamma: f64, tau: f64, phi: f64) -> Result<Self, ModelError> {
        if !gamma.is_finite() || gamma < 0.0 {
            return Err(ModelError::InvalidGamma(gamma));
        }
        if !tau.is_finite() || tau < 0.0 {
            return Err(ModelError::InvalidTau(tau));
        }
        if !phi.is_finite() {
            return Err(ModelError::NonFinite { name: "phi", value: phi });
        }
        let check = |name, value: f64| {
            if value.is_finite() {
                Ok(())
            } else {
                Err(ModelError::NonFinite { name, value })
            }
        };
        match emitter {
            EmitterKind::TwoLevel { delta } => check("delta", delta)?,
            EmitterKind::ChiralV { delta1, delta2 } => {
                check("delta1", delta1)?;
                check("delta2", delta2)?;
            }
        }
        let mut phi = phi.rem_euclid(TAU);
        if phi >= TAU {
            phi = 0.0;
        }
        Ok(Self { emitter, gamma, tau, phi })
    }

    pub fn two_level(gamma: f64, tau: f64, phi: f64, delta: f64) -> Result<Self, ModelError> {
        Self::new(EmitterKind::TwoLevel { delta }, gamma, tau, phi)
    }

    pub fn chiral_v(gamma: f64, tau: f64, phi: f64, delta1: f64, delta2: f64) -> Result<Self, ModelError> {
        Self::new(EmitterKind::ChiralV { delta1, delta2 }, gamma, tau, phi)
    }

    /// Same parameters with a different delay.
    pub fn with_tau(&self, tau: f64) -> Result<Self, ModelError> {
        Self::new(self.emitter, self.gamma, tau, self.phi)
    }

    pub fn with_phi(&self, phi: f64) -> Result<Self, ModelError> {
        Self::new(self.emitter, self.gamma, self.tau, phi)
    }

    pub fn two_level_delta(&self) -> Result<f64, ModelError> {
        match self.emitter {
            EmitterKind::TwoLevel { delta } => Ok(delta),
            EmitterKind::ChiralV { .. } => Err(ModelError::NotTwoLevel),
        }
    }

    pub fn v_deltas(&self) -> Result<(f64, f64), ModelError> {
        match self.emitter {
            EmitterKind::ChiralV { delta1, delta2 } => Ok((delta1, delta2)),
            EmitterKind::TwoLevel { .. } => Err(ModelError::NotChiralV),
        }
    }

    /// A frequency scale used for relative thresholds; `γ` unless the
    /// emitter is decoupled.
    pub(crate) fn scale(&self) -> f64 {
        if self.gamma > 0.0 {
            return self.gamma;
        }
        let d = match self.emitter {
            EmitterKind::TwoLevel { delta } => delta.abs(),
            EmitterKind::ChiralV { delta1, delta2 } => delta1.abs().max(delta2.abs()),
        };
        if d > 0.0 {
            d
        } else if self.tau > 0.0 {
            1.0 / self.tau
        } else {
            1.0
        }
    }
}

/// `e^{iω̄τ} = −e^{iφ}`.
pub fn phase_factor(params: &ModelParams) -> Complex64 {
    -Complex64::from_polar(1.0, params.phi)
}

/// `cos ω̄τ = −cos φ`.
pub fn cos_round_trip(params: &ModelParams) -> f64 {
    -params.phi.cos()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkovEffectiveParams {
    pub delta_eff: f64,
    pub gamma_eff: f64,
}

/// Mirror-renormalized detuning and decay rate of a two-level emitter in
/// the limit `γτ → 0`.
pub fn markov_effective(params: &ModelParams) -> Result<MarkovEffectiveParams, ModelError> {
    let delta = params.two_level_delta()?;
    let gamma = params.gamma;
    // 4 cos²(φ/2) = 2(1 + cos φ); the second form is exactly 0 at φ = π.
    let gamma_eff = (2.0 * gamma * (1.0 + params.phi.cos())).max(0.0);
    Ok(MarkovEffectiveParams { delta_eff: delta - gamma * params.phi.sin(), gamma_eff })
}

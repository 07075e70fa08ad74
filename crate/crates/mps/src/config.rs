//! Discretization parameters and the optional coherent drive.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use wgfb_core::ModelParams;

use crate::error::{MpsError, MpsResult};

/// Time-bin discretization. The delay is always an integer number of bins,
/// `τ = delay_bins·dt`; [`MpsConfig::new`] snaps a requested delay.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MpsConfig {
    pub dt: f64,
    /// Bins carrying the input wavepacket, `T = n_steps·dt`.
    pub n_steps: usize,
    pub delay_bins: usize,
    pub max_bond: usize,
    /// Largest discarded weight `Σ s²` allowed per decomposition before the
    /// bond cap applies.
    pub trunc_threshold: f64,
    /// Fock-space dimension per bin.
    pub bin_cutoff: usize,
    /// Vacuum bins after the packet so that it fully leaves the loop.
    pub tail_bins: usize,
    /// Discarded weight per step above which the run aborts.
    pub step_budget: f64,
    #[serde(default)]
    pub scheme: StepScheme,
}

/// How one time step is turned into a gate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepScheme {
    /// `exp(G)` with the bare coupling `√(γΔt)`; errors are `O(γΔt)`.
    FirstOrder,
    /// Detuning split symmetrically around the coupling exponential, with
    /// the coupling matched to the exact emitter decay over one step.
    #[default]
    Symmetric,
}

impl MpsConfig {
    /// Discretization for a packet of duration `γT = gamma_t`, returning the
    /// parameters with `τ` snapped to `round(τ/dt)·dt`.
    pub fn new(params: &ModelParams, dt: f64, gamma_t: f64, max_bond: usize) -> MpsResult<(Self, ModelParams)> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(MpsError::ConfigInvalid(format!("dt must be positive, got {dt}")));
        }
        if !(gamma_t > 0.0 && gamma_t.is_finite()) || !(params.gamma > 0.0) {
            return Err(MpsError::ConfigInvalid("packet length needs γ > 0 and γT > 0".into()));
        }
        let m = (params.tau / dt).round();
        if m < 1.0 {
            return Err(MpsError::ConfigInvalid(format!(
                "delay τ = {} is shorter than half a bin (dt = {dt}); the loop needs at least one bin",
                params.tau
            )));
        }
        let m = m as usize;
        let snapped = params.with_tau(m as f64 * dt)?;
        let n = (gamma_t / (params.gamma * dt)).round() as usize;
        let tail = ((2.0 * snapped.tau + 20.0 / params.gamma) / dt).ceil() as usize;
        let cfg = Self {
            dt,
            n_steps: n,
            delay_bins: m,
            max_bond,
            trunc_threshold: 1e-12,
            bin_cutoff: 3,
            tail_bins: tail,
            step_budget: 1e-4,
            scheme: StepScheme::Symmetric,
        };
        cfg.validate(&snapped)?;
        Ok((cfg, snapped))
    }

    pub fn validate(&self, params: &ModelParams) -> MpsResult<()> {
        let bad = |m: String| Err(MpsError::ConfigInvalid(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if self.delay_bins == 0 {
            return bad("delay_bins must be at least 1".into());
        }
        if self.bin_cutoff < 3 {
            return bad(format!("bin_cutoff must be ≥ 3, got {}", self.bin_cutoff));
        }
        if self.max_bond < 1 {
            return bad("max_bond must be positive".into());
        }
        if !(self.trunc_threshold >= 0.0) || !(self.step_budget > 0.0) {
            return bad("truncation threshold and step budget must be non-negative".into());
        }
        let g = params.gamma;
        if g * self.dt > 0.2 {
            return bad(format!("γΔt = {} exceeds 0.2", g * self.dt));
        }
        let min_n = if g > 0.0 { ((10.0 / (g * self.dt)).ceil() as usize).max(self.delay_bins) } else { self.delay_bins.max(2) };
        if self.n_steps < min_n {
            return bad(format!("n_steps = {} is below the minimum {min_n}", self.n_steps));
        }
        let tau = self.snapped_tau();
        if (params.tau - tau).abs() > 1e-9 * tau.max(1.0) {
            return bad(format!("τ = {} is not delay_bins·dt = {tau}", params.tau));
        }
        Ok(())
    }

    pub fn snapped_tau(&self) -> f64 {
        self.delay_bins as f64 * self.dt
    }

    /// Wavepacket duration `T`.
    pub fn packet_duration(&self) -> f64 {
        self.n_steps as f64 * self.dt
    }

    /// Auxiliary loop bins, packet bins and tail bins.
    pub fn total_bins(&self) -> usize {
        self.delay_bins + self.n_steps + self.tail_bins
    }

    /// Steps needed for every non-auxiliary bin to enter the loop once.
    pub fn total_steps(&self) -> usize {
        self.n_steps + self.tail_bins
    }
}

/// Coherent drive of amplitude `β` in the input channel; after the Mollow
/// shift it acts on the emitter with Rabi frequency `Ω_R = β*√γ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriveConfig {
    pub beta: Complex64,
}

impl DriveConfig {
    pub fn from_rabi(rabi: Complex64, gamma: f64) -> Self {
        Self { beta: rabi.conj() / gamma.sqrt() }
    }

    pub fn rabi(&self, gamma: f64) -> Complex64 {
        self.beta.conj() * gamma.sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snaps_delay() {
        let p = ModelParams::two_level(1.0, 1.04, 0.0, 0.0).unwrap();
        let (c, s) = MpsConfig::new(&p, 0.1, 100.0, 32).unwrap();
        assert_eq!(c.delay_bins, 10);
        assert_eq!(s.tau, 1.0);
        assert_eq!(c.n_steps, 1000);
        assert_eq!(c.tail_bins, 220);
        assert_eq!(c.total_bins(), 1230);
    }

    #[test]
    fn rejects_bad_configs() {
        let p = ModelParams::two_level(1.0, 0.0, 0.0, 0.0).unwrap();
        assert!(MpsConfig::new(&p, 0.1, 100.0, 32).is_err());
        let p = ModelParams::two_level(1.0, 1.0, 0.0, 0.0).unwrap();
        assert!(MpsConfig::new(&p, 0.3, 100.0, 32).is_err());
        assert!(MpsConfig::new(&p, 0.1, 5.0, 32).is_err());
        let (mut c, s) = MpsConfig::new(&p, 0.1, 100.0, 32).unwrap();
        c.bin_cutoff = 2;
        assert!(c.validate(&s).is_err());
    }

    #[test]
    fn rabi_round_trip() {
        let d = DriveConfig::from_rabi(Complex64::new(0.3, -0.1), 4.0);
        let r = d.rabi(4.0);
        assert!((r - Complex64::new(0.3, -0.1)).norm() < 1e-15);
    }
}

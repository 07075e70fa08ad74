//! Stroboscopic time evolution.
//!
//! At the start of step `s` the chain reads
//! `[out 0..s][loop s..s+m][emitter][s+m..]` with the orthogonality center
//! on bin `s`. That bin is swapped next to the emitter, the gate acts on
//! (bin `s`, emitter, bin `s+m`), and bin `s` is swapped back so that it
//! joins the output region.

use faer::Mat;
use num_complex::Complex64;
use wgfb_core::{phase_factor, EmitterKind, ModelParams};

use crate::config::{DriveConfig, MpsConfig, StepScheme};
use crate::error::{MpsError, MpsResult};
use crate::linalg::{expm_hermitian, Truncation, C, ZERO};
use crate::observables::populations;
use crate::state::{MpsState, Site};

/// Coupling of the emitter to one bin during one step. The bare value is
/// `√(γΔt)`. The matched value solves `cos(√k c) = e^{−kγΔt/2}` with `k`
/// the number of channels an excited level couples to, so one step
/// reproduces the exact decay of an undriven, undetuned emitter.
pub fn step_coupling(params: &ModelParams, config: &MpsConfig) -> f64 {
    let x = params.gamma * config.dt;
    if config.scheme == StepScheme::FirstOrder || x <= 0.0 {
        return x.max(0.0).sqrt();
    }
    let k = if params.emitter.is_two_level() { 2.0 } else { 1.0 };
    (-k * x / 2.0).exp().acos() / f64::sqrt(k)
}

/// Emitter Hamiltonian diagonal (`−δ` on each excited level) and the
/// levels coupled to the incoming and returning bins.
fn emitter_levels(params: &ModelParams) -> (Vec<f64>, usize, usize) {
    match params.emitter {
        EmitterKind::TwoLevel { delta } => (vec![0.0, -delta], 1, 1),
        EmitterKind::ChiralV { delta1, delta2 } => (vec![0.0, -delta1, -delta2], 1, 2),
    }
}

/// Generator of one step on the basis `(n_old, emitter, n_cur)`, returned as
/// the Hermitian `H′` with `U = exp(−iH′)`. The emitter detuning is left out
/// unless `with_detuning`.
fn step_hamiltonian(params: &ModelParams, config: &MpsConfig, drive: Option<&DriveConfig>, with_detuning: bool) -> Mat<C> {
    let db = config.bin_cutoff;
    let (h_diag, s1, s2) = emitter_levels(params);
    let de = h_diag.len();
    let x = db * de * db;
    let idx = |no: usize, s: usize, nc: usize| (no * de + s) * db + nc;
    let dt = config.dt;
    // e^{−iω̄τ}
    let back = phase_factor(params).conj();
    let c = step_coupling(params, config);
    // the displaced input bin β√Δt seen through the bin coupling; equals
    // Ω_RΔt at the bare coupling
    let drive_dt = drive.map_or(ZERO, |d| d.beta.conj() * c * dt.sqrt());

    // K collects the terms whose adjoint is subtracted: G = −iH_aΔt + K − K†
    let mut k = Mat::<C>::zeros(x, x);
    for no in 0..db {
        for nc in 0..db {
            // a†_cur σ₁
            if nc + 1 < db {
                k[(idx(no, 0, nc + 1), idx(no, s1, nc))] += c * ((nc + 1) as f64).sqrt();
            }
            // −e^{−iω̄τ} a†_old σ₂
            if no + 1 < db {
                k[(idx(no + 1, 0, nc), idx(no, s2, nc))] -= c * back * ((no + 1) as f64).sqrt();
            }
            // Ω_R(σ₁ − σ₂ e^{−iω̄τ})Δt
            k[(idx(no, 0, nc), idx(no, s1, nc))] += drive_dt;
            k[(idx(no, 0, nc), idx(no, s2, nc))] -= drive_dt * back;
        }
    }
    // H′ = iG = H_aΔt + i(K − K†)
    Mat::from_fn(x, x, |r, col| {
        let mut v = C::new(0.0, 1.0) * (k[(r, col)] - k[(col, r)].conj());
        if r == col && with_detuning {
            v += h_diag[(r / db) % de] * dt;
        }
        v
    })
}

/// The step unitary on `(n_old, emitter, n_cur)`.
pub(crate) fn step_gate(params: &ModelParams, config: &MpsConfig, drive: Option<&DriveConfig>) -> MpsResult<Mat<C>> {
    match config.scheme {
        StepScheme::FirstOrder => expm_hermitian(step_hamiltonian(params, config, drive, true).as_ref()),
        StepScheme::Symmetric => {
            let u = expm_hermitian(step_hamiltonian(params, config, drive, false).as_ref())?;
            let (h_diag, _, _) = emitter_levels(params);
            let (db, de) = (config.bin_cutoff, h_diag.len());
            let half = |r: usize| C::from_polar(1.0, -h_diag[(r / db) % de] * config.dt / 2.0);
            Ok(Mat::from_fn(u.nrows(), u.ncols(), |r, c| half(r) * u[(r, c)] * half(c)))
        }
    }
}

/// Precomputed step unitary and truncation settings.
#[derive(Clone, Debug)]
pub struct Evolution {
    gate: Mat<C>,
    trunc: Truncation,
    budget: f64,
    driven: bool,
    total_steps: usize,
}

impl Evolution {
    pub fn new(params: &ModelParams, config: &MpsConfig, drive: Option<&DriveConfig>) -> MpsResult<Self> {
        config.validate(params)?;
        let gate = step_gate(params, config, drive)?;
        Ok(Self {
            gate,
            trunc: Truncation { max_bond: config.max_bond, threshold: config.trunc_threshold },
            budget: config.step_budget,
            driven: drive.is_some_and(|d| d.beta != Complex64::new(0.0, 0.0)),
            total_steps: config.total_steps(),
        })
    }

    /// Advances by one step; returns the weight discarded in it.
    pub fn step(&self, state: &mut MpsState) -> MpsResult<f64> {
        if self.driven {
            state.drop_charges();
        }
        let s = state.steps_done;
        let m = state.delay_bins;
        if s >= self.total_steps || s + m >= state.bin_pos.len() {
            return Err(MpsError::ConfigInvalid(format!("no bin left to scatter after {s} steps")));
        }
        let p_old = state.bin_pos[s];
        let p_em = state.emitter_pos;
        if state.center != p_old || p_em != p_old + m || state.labels[p_em + 1] != Site::Bin(s + m) {
            return Err(MpsError::ConfigInvalid("state layout does not match the step counter".into()));
        }
        let mut discarded = 0.0;
        for i in p_old..p_em - 1 {
            discarded += state.swap(i, self.trunc, true)?;
        }
        discarded += state.apply_three_site(p_em, self.gate.as_ref(), self.trunc, m == 1)?;
        if m >= 2 {
            for i in (p_old..p_em - 1).rev() {
                discarded += state.swap(i, self.trunc, i == p_old)?;
            }
        }
        debug_assert_eq!(state.center, p_old + 1);
        state.steps_done += 1;
        state.discarded.push(discarded);
        if discarded > self.budget {
            return Err(MpsError::TruncationBudgetExceeded { step: s, discarded, budget: self.budget });
        }
        Ok(discarded)
    }
}

/// One stroboscopic step `U_k` with `k = state.steps_done()`.
pub fn stroboscopic_step(state: &mut MpsState, params: &ModelParams, config: &MpsConfig, drive: Option<&DriveConfig>) -> MpsResult<f64> {
    Evolution::new(params, config, drive)?.step(state)
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct Diagnostics {
    pub steps: usize,
    pub discarded_per_step: Vec<f64>,
    pub cumulative_discarded: f64,
    pub max_bond: usize,
    pub norm: f64,
    pub total_photons: f64,
    pub emitter_populations: Vec<f64>,
}

impl Diagnostics {
    pub fn of(state: &MpsState) -> Self {
        let pops = populations(state);
        Self {
            steps: state.steps_done(),
            discarded_per_step: state.discarded_log().to_vec(),
            cumulative_discarded: state.cumulative_discarded(),
            max_bond: state.max_bond(),
            norm: state.norm(),
            total_photons: pops.total_photons,
            emitter_populations: pops.emitter,
        }
    }
}

/// Runs every remaining step of `config`.
pub fn run_scattering(
    mut state: MpsState,
    params: &ModelParams,
    config: &MpsConfig,
    drive: Option<&DriveConfig>,
) -> MpsResult<(MpsState, Diagnostics)> {
    let ev = Evolution::new(params, config, drive)?;
    while state.steps_done() < config.total_steps() {
        ev.step(&mut state)?;
    }
    let d = Diagnostics::of(&state);
    Ok((state, d))
}

//! Expectation values, field correlations and spectra of the output bins.

use faer::Mat;
use wgfb_core::results::delay_marks;
use wgfb_core::{CorrelationResult, SpectralResult};

use crate::config::DriveConfig;
use crate::error::{MpsError, MpsResult};
use crate::linalg::{matmul, split, Tensor, Truncation, C, ZERO};
use crate::state::{MpsState, Site};

/// Local operator, `d × d` row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalOp {
    d: usize,
    m: Vec<C>,
}

impl LocalOp {
    pub fn identity(d: usize) -> Self {
        Self::from_fn(d, |i, j| if i == j { C::new(1.0, 0.0) } else { ZERO })
    }

    pub fn from_fn(d: usize, f: impl Fn(usize, usize) -> C) -> Self {
        let mut m = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                m.push(f(i, j));
            }
        }
        Self { d, m }
    }

    /// Annihilation operator truncated at `d` levels.
    pub fn annihilation(d: usize) -> Self {
        Self::from_fn(d, |i, j| if j == i + 1 { C::new((j as f64).sqrt(), 0.0) } else { ZERO })
    }

    /// `|k⟩⟨k|`.
    pub fn projector(d: usize, k: usize) -> Self {
        Self::from_fn(d, |i, j| if i == k && j == k { C::new(1.0, 0.0) } else { ZERO })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn at(&self, i: usize, j: usize) -> C {
        self.m[i * self.d + j]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.d, |i, j| self.at(j, i).conj())
    }

    pub fn product(&self, rhs: &Self) -> Self {
        Self::from_fn(self.d, |i, j| (0..self.d).map(|k| self.at(i, k) * rhs.at(k, j)).sum())
    }

    pub fn scaled_plus_identity(&self, scale: f64, shift: C) -> Self {
        Self::from_fn(self.d, |i, j| self.at(i, j) * scale + if i == j { shift } else { ZERO })
    }
}

/// Output field operator `B = a/√Δt + β`.
pub fn field_operator(d: usize, dt: f64, beta: C) -> LocalOp {
    LocalOp::annihilation(d).scaled_plus_identity(1.0 / dt.sqrt(), beta)
}

/// `E′[b, b′] = Σ conj(A[a, n, b]) E[a, a′] O[n, n′] A[a′, n′, b′]`.
fn transfer_left(e: &Mat<C>, t: &Tensor, op: Option<&LocalOp>) -> Mat<C> {
    let ea = matmul(e.as_ref(), t.right_matrix());
    // ea[a, (n′, b′)] → apply O on n′
    let (d, dr) = (t.d, t.dr);
    let applied = match op {
        None => ea,
        Some(o) => Mat::from_fn(t.dl, d * dr, |a, c| {
            let (n, b) = (c / dr, c % dr);
            (0..d).map(|k| o.at(n, k) * ea[(a, k * dr + b)]).sum()
        }),
    };
    let re = Tensor::from_matrix(applied.as_ref(), t.dl, d, dr);
    t.left_matrix().adjoint() * re.left_matrix()
}

/// `F′[a, a′] = Σ A[a, n, b] F[b, b′] conj(A[a′, n′, b′]) O[n′, n]`-style
/// right transfer, with `O` acting on the ket.
fn transfer_right(f: &Mat<C>, t: &Tensor, op: Option<&LocalOp>) -> Mat<C> {
    let (d, dr) = (t.d, t.dr);
    // af[(a, n), b′] = Σ_b A[a, n, b] F[b, b′]
    let af = matmul(t.left_matrix(), f.as_ref());
    let applied = match op {
        None => af,
        Some(o) => Mat::from_fn(t.dl * d, dr, |r, b| {
            let (a, n) = (r / d, r % d);
            (0..d).map(|k| o.at(n, k) * af[(a * d + k, b)]).sum()
        }),
    };
    let at = Tensor::from_matrix(applied.as_ref(), t.dl, d, dr);
    // F′[a, a′] = Σ_{n, b′} at[a, n, b′] conj(A[a′, n, b′])
    at.right_matrix() * t.right_matrix().adjoint()
}

fn trace(m: &Mat<C>) -> C {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)]).sum()
}

fn identity(n: usize) -> Mat<C> {
    Mat::<C>::identity(n, n)
}

/// Emitter and field populations of a state.
#[derive(Clone, Debug, PartialEq)]
pub struct Populations {
    /// `⟨|k⟩⟨k|⟩` for each emitter level.
    pub emitter: Vec<f64>,
    /// `⟨a†a⟩` per bin index.
    pub bin_photons: Vec<f64>,
    pub total_photons: f64,
}

/// Local expectation values `⟨O_i⟩` for every site, with `O_i = op(i)`.
/// Sites mapped to `None` give 0.
fn local_sweep(state: &MpsState, op: impl Fn(usize) -> Option<LocalOp>) -> Vec<C> {
    let n = state.n_sites();
    let c = state.center;
    let mut out = vec![ZERO; n];
    // right of the center: left environment carried from c, right side is identity
    let mut e = identity(state.tensors[c].dl);
    for (i, t) in state.tensors.iter().enumerate().skip(c) {
        if let Some(o) = op(i) {
            out[i] = trace(&transfer_left(&e, t, Some(&o)));
        }
        e = transfer_left(&e, t, None);
    }
    // left of the center: right environment carried down from c
    let mut f = transfer_right(&identity(state.tensors[c].dr), &state.tensors[c], None);
    for i in (0..c).rev() {
        let t = &state.tensors[i];
        if let Some(o) = op(i) {
            out[i] = trace(&transfer_right(&f, t, Some(&o)));
        }
        f = transfer_right(&f, t, None);
    }
    out
}

pub fn populations(state: &MpsState) -> Populations {
    let n_op = LocalOp::annihilation(state.bin_dim).adjoint().product(&LocalOp::annihilation(state.bin_dim));
    let vals = local_sweep(state, |i| match state.labels[i] {
        Site::Bin(_) => Some(n_op.clone()),
        Site::Emitter => None,
    });
    let bin_photons: Vec<f64> = state.bin_pos.iter().map(|&p| vals[p].re).collect();
    let e = state.emitter_pos;
    let emitter = (0..state.emitter_dim)
        .map(|k| {
            let o = LocalOp::projector(state.emitter_dim, k);
            local_sweep_single(state, e, &o).re
        })
        .collect();
    let total_photons = bin_photons.iter().sum();
    Populations { emitter, bin_photons, total_photons }
}

/// `⟨O⟩` at one site.
fn local_sweep_single(state: &MpsState, pos: usize, op: &LocalOp) -> C {
    let c = state.center;
    if pos >= c {
        let mut e = identity(state.tensors[c].dl);
        for t in &state.tensors[c..pos] {
            e = transfer_left(&e, t, None);
        }
        trace(&transfer_left(&e, &state.tensors[pos], Some(op)))
    } else {
        let mut f = identity(state.tensors[c].dr);
        for t in state.tensors[pos + 1..=c].iter().rev() {
            f = transfer_right(&f, t, None);
        }
        trace(&transfer_right(&f, &state.tensors[pos], Some(op)))
    }
}

/// Tensors `lo..=center` with the center moved onto `lo` (element 0).
fn window_centered_at(state: &MpsState, lo: usize) -> MpsResult<Vec<Tensor>> {
    let c = state.center;
    if lo > c {
        return Err(MpsError::WindowOutOfRange { first: lo, last: lo, lo: 0, hi: c });
    }
    let mut ts: Vec<Tensor> = state.tensors[lo..=c].to_vec();
    for i in (1..ts.len()).rev() {
        let t = &ts[i];
        let (d, dr) = (t.d, t.dr);
        let sp = split(t.right_matrix(), None, Truncation::EXACT)?;
        let r = sp.s.len();
        let us = sp.us();
        let prev = &ts[i - 1];
        let merged = matmul(prev.left_matrix(), us.as_ref());
        ts[i - 1] = Tensor::from_matrix(merged.as_ref(), prev.dl, prev.d, r);
        ts[i] = Tensor::from_matrix(sp.vh.as_ref(), r, d, dr);
    }
    Ok(ts)
}

/// Lag window over output bins `k0..=k0 + max_lag`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Window {
    pub k0: usize,
    pub max_lag: usize,
}

impl Window {
    /// The second half of the fully formed output: bins `m..N` for a packet
    /// of `N` bins (output bin `j` has seen input up to bin `j + m`), or
    /// `m..steps_done` under a stationary drive. Starting halfway lets the
    /// switch-on transient decay at the slowest pole rate.
    pub fn default_for(state: &MpsState, driven: bool) -> MpsResult<Self> {
        let m = state.delay_bins;
        let end = if driven { state.steps_done } else { state.packet_bins.min(state.steps_done) };
        let k0 = (m + end) / 2;
        if end < k0 + 2 {
            return Err(MpsError::WindowOutOfRange { first: k0, last: k0 + 1, lo: m, hi: end.saturating_sub(1) });
        }
        Ok(Self { k0, max_lag: end - 1 - k0 })
    }
}

/// Raw correlations of the output field over a window.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldCorrelations {
    /// `G¹(l) = ⟨B†_{k0+l} B_{k0}⟩`.
    pub g1: Vec<C>,
    /// `G²(l) = ⟨B†_{k0} B†_{k0+l} B_{k0+l} B_{k0}⟩`.
    pub g2: Vec<f64>,
    /// `⟨B†_j B_j⟩` for `j = k0 + l`.
    pub intensity: Vec<f64>,
    /// `⟨B_j⟩` for `j = k0 + l`.
    pub mean_field: Vec<C>,
}

/// Contracts the window once, collecting one- and two-point functions of
/// `B = a/√Δt + β`.
pub fn field_correlations(state: &MpsState, window: Window, drive: Option<&DriveConfig>) -> MpsResult<FieldCorrelations> {
    let Window { k0, max_lag } = window;
    let last = k0 + max_lag;
    let hi = state.steps_done.min(state.center);
    if last >= hi {
        return Err(MpsError::WindowOutOfRange { first: k0, last, lo: 0, hi: hi.saturating_sub(1) });
    }
    // output bins sit in natural order at the front of the chain
    let ts = window_centered_at(state, k0)?;
    let beta = drive.map_or(ZERO, |d| d.beta);
    let b = field_operator(state.bin_dim, state.dt, beta);
    let bd = b.adjoint();
    let nb = bd.product(&b);
    let nn = bd.product(&bd).product(&b).product(&b);

    let t0 = &ts[0];
    let id = identity(t0.dl);
    let mut g1 = Vec::with_capacity(max_lag + 1);
    let mut g2 = Vec::with_capacity(max_lag + 1);
    let mut intensity = Vec::with_capacity(max_lag + 1);
    let mut mean_field = Vec::with_capacity(max_lag + 1);
    let i0 = trace(&transfer_left(&id, t0, Some(&nb))).re;
    g1.push(C::new(i0, 0.0));
    g2.push(trace(&transfer_left(&id, t0, Some(&nn))).re);
    intensity.push(i0);
    mean_field.push(trace(&transfer_left(&id, t0, Some(&b))));

    let mut e_plain = transfer_left(&id, t0, None);
    let mut e_b = transfer_left(&id, t0, Some(&b));
    let mut e_n = transfer_left(&id, t0, Some(&nb));
    // right environment beyond any site of the window is the identity
    for t in &ts[1..=max_lag] {
        g1.push(trace(&transfer_left(&e_b, t, Some(&bd))));
        g2.push(trace(&transfer_left(&e_n, t, Some(&nb))).re);
        intensity.push(trace(&transfer_left(&e_plain, t, Some(&nb))).re);
        mean_field.push(trace(&transfer_left(&e_plain, t, Some(&b))));
        e_plain = transfer_left(&e_plain, t, None);
        e_b = transfer_left(&e_b, t, None);
        e_n = transfer_left(&e_n, t, None);
    }
    Ok(FieldCorrelations { g1, g2, intensity, mean_field })
}

/// How the spectrum is referred to the analytic normalization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Normalization {
    /// Two-photon packet of duration `γT`: `S̃ = (γT)² S`.
    TwoPhoton { gamma_t: f64 },
    /// Weak coherent drive: `S̃ = 2γ² S / |β|⁴`.
    Coherent { gamma: f64, beta: C },
    Raw,
}

/// Inelastic spectrum on `grid` from the fluctuating part of `G¹`.
///
/// For a packet the constant background is the mean of the last tenth of
/// the lags; for a drive the disconnected part `⟨B†⟩⟨B⟩` is removed.
pub fn inelastic_spectrum_mps(corr: &FieldCorrelations, dt: f64, grid: &[f64], norm: Normalization) -> MpsResult<SpectralResult> {
    let n = corr.g1.len();
    if n < 10 {
        return Err(MpsError::WindowOutOfRange { first: 0, last: n, lo: 0, hi: 10 });
    }
    let fluct: Vec<C> = match norm {
        Normalization::Coherent { .. } => {
            let b0 = corr.mean_field[0];
            corr.g1.iter().zip(&corr.mean_field).map(|(g, bl)| g - bl.conj() * b0).collect()
        }
        _ => {
            let tail = (n / 10).max(1);
            let off: C = corr.g1[n - tail..].iter().sum::<C>() / tail as f64;
            corr.g1.iter().map(|g| g - off).collect()
        }
    };
    let peak = fluct[0].norm();
    let tail = (n / 10).max(1);
    let tail_max = fluct[n - tail..].iter().map(|x| x.norm()).fold(0.0, f64::max);
    if tail_max > 0.01 * peak {
        return Err(MpsError::WindowTooShort { tail: tail_max, peak });
    }
    let scale = match norm {
        Normalization::TwoPhoton { gamma_t } => gamma_t * gamma_t,
        Normalization::Coherent { gamma, beta } => 2.0 * gamma * gamma / beta.norm_sqr().powi(2),
        Normalization::Raw => 1.0,
    };
    let inelastic = grid
        .iter()
        .map(|&nu| {
            let s: f64 = fluct
                .iter()
                .enumerate()
                .map(|(l, g)| {
                    let w = if l == 0 { 0.5 } else { 1.0 };
                    w * (g * C::from_polar(1.0, nu * l as f64 * dt)).re
                })
                .sum();
            scale * dt / std::f64::consts::PI * s
        })
        .collect();
    Ok(SpectralResult { elastic_weight: None, grid: grid.to_vec(), inelastic, flagged: Vec::new() })
}

/// Normalized `g²(l·Δt) = G²(l) / (I_{k0} I_{k0+l})`; lags whose intensity
/// falls below `floor` are an error.
///
/// A bin correlator at lag `l` averages `g²` over `[(l−1)Δt, (l+1)Δt]`, and
/// over `[0, Δt]` at `l = 0`. Where `g²` has a kink, at `t = nτ`, that
/// average is off by `O(Δt·slope jump)`. Those lags are replaced by a
/// polynomial extrapolation from the lags strictly inside the neighbouring
/// delay interval (from the right at `l = 0`, from the left otherwise) and
/// flagged.
pub fn g2_mps(corr: &FieldCorrelations, dt: f64, delay_bins: usize, floor: f64) -> MpsResult<CorrelationResult> {
    let i0 = corr.intensity[0];
    let low: Vec<usize> = corr.intensity.iter().enumerate().filter(|(_, &x)| x * i0 < floor * floor || x < floor).map(|(l, _)| l).collect();
    if !low.is_empty() {
        return Err(MpsError::IntensityFloor { lags: low });
    }
    let grid: Vec<f64> = (0..corr.g2.len()).map(|l| l as f64 * dt).collect();
    let raw: Vec<f64> = corr.g2.iter().zip(&corr.intensity).map(|(g, il)| g / (i0 * il)).collect();
    let mut values = raw.clone();
    let m = delay_bins.max(1);
    let interior = m - 1;
    let mut flagged = Vec::new();
    for mark in (0..raw.len()).step_by(m) {
        let side: Vec<f64> = if mark == 0 {
            (1..raw.len()).take(interior.min(3)).map(|l| raw[l]).collect()
        } else {
            (1..=interior.min(3)).map(|k| raw[mark - k]).collect()
        };
        values[mark] = match side[..] {
            [a, b, c] => 3.0 * a - 3.0 * b + c,
            [a, b] => 2.0 * a - b,
            _ => raw[mark],
        };
        flagged.push(mark);
    }
    let marks = delay_marks(&grid, m as f64 * dt);
    Ok(CorrelationResult { grid, values, delay_marks: marks, flagged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{MpsConfig, StepScheme};
    use wgfb_core::ModelParams;
    use crate::engine::run_scattering;
    use crate::state::{build_state, build_two_photon_mps, build_vacuum_mps, EmitterInit};

    fn cfg(m: usize, n: usize, tail: usize) -> MpsConfig {
        MpsConfig { dt: 0.1, n_steps: n, delay_bins: m, max_bond: 64, trunc_threshold: 1e-14, bin_cutoff: 3, tail_bins: tail, step_budget: 1e-4, scheme: StepScheme::Symmetric }
    }

    #[test]
    fn flat_packet_populations() {
        let p = ModelParams::two_level(0.0, 0.2, 0.0, 0.0).unwrap();
        let c = cfg(2, 8, 1);
        let s = build_two_photon_mps(&c, &p).unwrap();
        let pops = populations(&s);
        assert!((pops.total_photons - 2.0).abs() < 1e-12);
        for j in 2..10 {
            assert!((pops.bin_photons[j] - 0.25).abs() < 1e-12);
        }
        assert!((pops.emitter[0] - 1.0).abs() < 1e-12);
        let e = build_state(&c, &p, 0, EmitterInit::Excited(1)).unwrap();
        assert!((populations(&e).emitter[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn free_packet_correlations() {
        // no coupling: output equals the flat two-photon input
        let p = ModelParams::two_level(0.0, 0.2, 0.0, 0.0).unwrap();
        let n = 20;
        let c = cfg(2, n, 0);
        let s = build_two_photon_mps(&c, &p).unwrap();
        let (s, _) = run_scattering(s, &p, &c, None).unwrap();
        let w = Window { k0: 4, max_lag: 10 };
        let corr = field_correlations(&s, w, None).unwrap();
        // ⟨a†_j a_k⟩ = 2/N per bin pair, B = a/√Δt
        let expect = 2.0 / (n as f64 * c.dt);
        for g in &corr.g1 {
            assert!((g - C::new(expect, 0.0)).norm() < 1e-10);
        }
        // ⟨a†_k a†_j a_j a_k⟩ = 2/N² for j ≠ k, and 2/N² again at j = k
        let expect2 = 2.0 / (n as f64 * n as f64 * c.dt * c.dt);
        for g in &corr.g2 {
            assert!((g - expect2).abs() < 1e-8 * expect2);
        }
        let g2 = g2_mps(&corr, c.dt, c.delay_bins, 1e-12).unwrap();
        assert!(g2.values.iter().all(|v| (v - 0.5).abs() < 1e-8));
        assert_eq!(g2.flagged, vec![0, 2, 4, 6, 8, 10]);
    }

    #[test]
    fn window_must_be_emitted() {
        let p = ModelParams::two_level(0.0, 0.2, 0.0, 0.0).unwrap();
        let c = cfg(2, 20, 0);
        let s = build_two_photon_mps(&c, &p).unwrap();
        let r = field_correlations(&s, Window { k0: 0, max_lag: 3 }, None);
        assert!(matches!(r, Err(MpsError::WindowOutOfRange { .. })));
    }

    #[test]
    fn spectrum_of_exponential_correlation() {
        // G¹(l) = e^{−κ l Δt} gives a Lorentzian κ/(π(κ² + ν²)) for small Δt
        let dt = 0.01;
        let kappa = 1.0;
        let n = 3000;
        let g1: Vec<C> = (0..n).map(|l| C::new((-kappa * l as f64 * dt).exp(), 0.0)).collect();
        let corr = FieldCorrelations { g1, g2: vec![0.0; n], intensity: vec![1.0; n], mean_field: vec![ZERO; n] };
        let grid = [0.0, 0.5, 2.0];
        let s = inelastic_spectrum_mps(&corr, dt, &grid, Normalization::Raw).unwrap();
        for (nu, v) in grid.iter().zip(&s.inelastic) {
            let exact = kappa / (std::f64::consts::PI * (kappa * kappa + nu * nu));
            assert!((v - exact).abs() < 2e-3 * exact.max(0.05), "{nu}: {v} vs {exact}");
        }
    }

    #[test]
    fn short_window_rejected() {
        let n = 100;
        let g1: Vec<C> = (0..n).map(|l| C::new((-(l as f64) * 0.01).exp(), 0.0)).collect();
        let corr = FieldCorrelations { g1, g2: vec![0.0; n], intensity: vec![1.0; n], mean_field: vec![ZERO; n] };
        let r = inelastic_spectrum_mps(&corr, 0.1, &[0.0], Normalization::Coherent { gamma: 1.0, beta: C::new(0.1, 0.0) });
        assert!(matches!(r, Err(MpsError::WindowTooShort { .. })));
    }

    #[test]
    fn decoupled_coherent_drive_is_poissonian() {
        let p = ModelParams::two_level(0.0, 0.3, 0.0, 0.0).unwrap();
        let c = cfg(3, 30, 0);
        let d = DriveConfig { beta: C::new(0.4, -0.3) };
        let (s, _) = run_scattering(build_vacuum_mps(&c, &p).unwrap(), &p, &c, Some(&d)).unwrap();
        let corr = field_correlations(&s, Window::default_for(&s, true).unwrap(), Some(&d)).unwrap();
        for (g, m) in corr.g1.iter().zip(&corr.mean_field) {
            assert!((g - C::new(0.25, 0.0)).norm() < 1e-12);
            assert!((m - d.beta).norm() < 1e-12);
        }
        let g2 = g2_mps(&corr, c.dt, c.delay_bins, 1e-12).unwrap();
        assert!(g2.values.iter().all(|v| (v - 1.0).abs() < 1e-10));
    }

    #[test]
    fn first_order_coherence_is_hermitian_at_zero_lag() {
        let p = ModelParams::two_level(1.0, 0.3, 0.4, 0.2).unwrap();
        let c = cfg(3, 120, 40);
        let d = DriveConfig { beta: C::new(0.2, 0.1) };
        let (s, _) = run_scattering(build_vacuum_mps(&c, &p).unwrap(), &p, &c, Some(&d)).unwrap();
        let w = Window::default_for(&s, true).unwrap();
        let corr = field_correlations(&s, w, Some(&d)).unwrap();
        assert!(corr.g1[0].im.abs() < 1e-12);
        assert!((corr.g1[0].re - corr.intensity[0]).abs() < 1e-12);
        // a later window starting at k0 + 1 sees ⟨B†_{k0+1} B_{k0+1}⟩ first
        let later = field_correlations(&s, Window { k0: w.k0 + 1, max_lag: 1 }, Some(&d)).unwrap();
        assert!((later.intensity[0] - corr.intensity[1]).abs() < 1e-12);
    }
}

//! MPS over the emitter and the time bins, with the bookkeeping needed to
//! move sites around the chain.

use faer::{Mat, MatRef};
use num_complex::Complex64;
use wgfb_core::ModelParams;

use crate::config::MpsConfig;
use crate::error::{MpsError, MpsResult};
use crate::linalg::{matmul, split, Tensor, Truncation, C, ZERO};

/// What sits at a chain position.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Site {
    Emitter,
    /// Time bin by index: `0..m` are the initially empty loop bins, the
    /// packet follows, then the vacuum tail.
    Bin(usize),
}

/// Initial emitter state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EmitterInit {
    Ground,
    /// Excited level `1` (two-level) or `1`/`2` (V-level).
    Excited(usize),
}

#[derive(Clone, Debug)]
pub struct MpsState {
    pub(crate) tensors: Vec<Tensor>,
    pub(crate) labels: Vec<Site>,
    /// `bin_pos[j]` is the chain position of bin `j`.
    pub(crate) bin_pos: Vec<usize>,
    pub(crate) emitter_pos: usize,
    /// Excitation number left of each bond (`n_sites + 1` entries), kept
    /// while the dynamics conserves it.
    pub(crate) charges: Option<Vec<Vec<i32>>>,
    pub(crate) center: usize,
    pub(crate) emitter_dim: usize,
    pub(crate) bin_dim: usize,
    pub(crate) delay_bins: usize,
    pub(crate) packet_bins: usize,
    pub(crate) dt: f64,
    pub(crate) steps_done: usize,
    /// Discarded weight per completed step.
    pub(crate) discarded: Vec<f64>,
}

fn emitter_dim(params: &ModelParams) -> usize {
    params.emitter.dim()
}

/// Two photons in a flat packet over the `n_steps` packet bins:
/// `(1/√2)(B†)²|0⟩` with `B† = N^{-1/2} Σ_k a†_k`. The emitter starts in
/// its ground state.
pub fn build_two_photon_mps(config: &MpsConfig, params: &ModelParams) -> MpsResult<MpsState> {
    build_state(config, params, 2, EmitterInit::Ground)
}

/// `B†|0⟩`, used as the elastic reference of a two-photon run.
pub fn build_one_photon_mps(config: &MpsConfig, params: &ModelParams) -> MpsResult<MpsState> {
    build_state(config, params, 1, EmitterInit::Ground)
}

/// Empty waveguide, emitter in its ground state.
pub fn build_vacuum_mps(config: &MpsConfig, params: &ModelParams) -> MpsResult<MpsState> {
    build_state(config, params, 0, EmitterInit::Ground)
}

/// `(n!)^{-1/2}(B†)^n|0⟩` over the packet bins (`n ≤ 2`) with a chosen
/// initial emitter state.
pub fn build_state(config: &MpsConfig, params: &ModelParams, photons: usize, init: EmitterInit) -> MpsResult<MpsState> {
    config.validate(params)?;
    let ed = emitter_dim(params);
    let d = config.bin_cutoff;
    let m = config.delay_bins;
    let n = config.n_steps;
    if photons > 2 {
        return Err(MpsError::ConfigInvalid(format!("packets carry at most two photons, got {photons}")));
    }
    if n < photons {
        return Err(MpsError::ConfigInvalid(format!("{photons} photons need at least {photons} packet bins")));
    }
    let level = match init {
        EmitterInit::Ground => 0,
        EmitterInit::Excited(l) if l >= 1 && l < ed => l,
        EmitterInit::Excited(l) => return Err(MpsError::ConfigInvalid(format!("emitter has no level {l}"))),
    };
    let e_charge = i32::from(level > 0);
    let n_bins = config.total_bins();
    let n_sites = n_bins + 1;

    let mut tensors = Vec::with_capacity(n_sites);
    let mut labels = Vec::with_capacity(n_sites);
    let mut charges: Vec<Vec<i32>> = vec![vec![0]];

    let vacuum_bin = || {
        let mut t = Tensor::zeros(1, d, 1);
        *t.at_mut(0, 0, 0) = C::new(1.0, 0.0);
        t
    };
    for j in 0..m {
        tensors.push(vacuum_bin());
        labels.push(Site::Bin(j));
        charges.push(vec![0]);
    }
    let mut e = Tensor::zeros(1, ed, 1);
    *e.at_mut(0, level, 0) = C::new(1.0, 0.0);
    tensors.push(e);
    labels.push(Site::Emitter);
    charges.push(vec![e_charge]);

    // amplitude √(n!) N^{-n/2} / Π √(n_k!), spread evenly over the bins;
    // the bond index counts photons placed so far
    let nf = (1..=photons).product::<usize>() as f64;
    let f = (nf.sqrt() / (n as f64).powf(photons as f64 / 2.0)).powf(1.0 / n as f64);
    let w = [f, f, f / 2f64.sqrt()];
    let p = photons;
    for k in 0..n {
        let (dl, dr) = (if k == 0 { 1 } else { p + 1 }, if k == n - 1 { 1 } else { p + 1 });
        let mut t = Tensor::zeros(dl, d, dr);
        for c in 0..dl {
            for np in 0..=p - c {
                let c2 = c + np;
                let b = if k == n - 1 {
                    if c2 != p {
                        continue;
                    }
                    0
                } else {
                    c2
                };
                *t.at_mut(c, np, b) = C::new(w[np], 0.0);
            }
        }
        tensors.push(t);
        labels.push(Site::Bin(m + k));
        charges.push(if k == n - 1 { vec![p as i32 + e_charge] } else { (0..=p as i32).map(|c| c + e_charge).collect() });
    }
    for k in 0..config.tail_bins {
        tensors.push(vacuum_bin());
        labels.push(Site::Bin(m + n + k));
        charges.push(vec![p as i32 + e_charge]);
    }

    let mut bin_pos = vec![0; n_bins];
    for (pos, l) in labels.iter().enumerate() {
        if let Site::Bin(j) = l {
            bin_pos[*j] = pos;
        }
    }
    let mut s = MpsState {
        tensors,
        labels,
        bin_pos,
        emitter_pos: m,
        charges: Some(charges),
        center: n_sites - 1,
        emitter_dim: ed,
        bin_dim: d,
        delay_bins: m,
        packet_bins: n,
        dt: config.dt,
        steps_done: 0,
        discarded: Vec::new(),
    };
    s.move_center_to(0)?;
    Ok(s)
}

impl MpsState {
    pub fn n_sites(&self) -> usize {
        self.tensors.len()
    }

    pub fn labels(&self) -> &[Site] {
        &self.labels
    }

    pub fn center(&self) -> usize {
        self.center
    }

    pub fn emitter_position(&self) -> usize {
        self.emitter_pos
    }

    pub fn bin_position(&self, bin: usize) -> Option<usize> {
        self.bin_pos.get(bin).copied()
    }

    pub fn steps_done(&self) -> usize {
        self.steps_done
    }

    pub fn delay_bins(&self) -> usize {
        self.delay_bins
    }

    pub fn packet_bins(&self) -> usize {
        self.packet_bins
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn bin_dim(&self) -> usize {
        self.bin_dim
    }

    pub fn emitter_dim(&self) -> usize {
        self.emitter_dim
    }

    /// Bond dimensions between neighbouring sites.
    pub fn bond_dims(&self) -> Vec<usize> {
        self.tensors[..self.tensors.len() - 1].iter().map(|t| t.dr).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    pub fn discarded_log(&self) -> &[f64] {
        &self.discarded
    }

    pub fn cumulative_discarded(&self) -> f64 {
        self.discarded.iter().sum()
    }

    /// `‖ψ‖`, read off the orthogonality center.
    pub fn norm(&self) -> f64 {
        self.tensors[self.center].data.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Whether bond charges are still tracked (excitation-conserving runs).
    pub fn conserves_excitations(&self) -> bool {
        self.charges.is_some()
    }

    pub(crate) fn drop_charges(&mut self) {
        self.charges = None;
    }

    pub(crate) fn phys_charge(&self, pos: usize, n: usize) -> i32 {
        match self.labels[pos] {
            Site::Emitter => i32::from(n > 0),
            Site::Bin(_) => n as i32,
        }
    }

    fn set_label(&mut self, pos: usize, s: Site) {
        self.labels[pos] = s;
        match s {
            Site::Emitter => self.emitter_pos = pos,
            Site::Bin(j) => self.bin_pos[j] = pos,
        }
    }

    /// Moves the orthogonality center without truncation.
    pub(crate) fn move_center_to(&mut self, target: usize) -> MpsResult<()> {
        while self.center > target {
            let i = self.center;
            let t = &self.tensors[i];
            let (d, dr) = (t.d, t.dr);
            let q = self.charges.as_ref().map(|ch| {
                let cols: Vec<i32> = (0..d * dr).map(|j| ch[i + 1][j % dr] - self.phys_charge(i, j / dr)).collect();
                (ch[i].clone(), cols)
            });
            let sp = split(t.right_matrix(), q.as_ref().map(|(r, c)| (r.as_slice(), c.as_slice())), Truncation::EXACT)?;
            let r = sp.s.len();
            let prev = &self.tensors[i - 1];
            let us = sp.us();
            let merged = matmul(prev.left_matrix(), us.as_ref());
            self.tensors[i - 1] = Tensor::from_matrix(merged.as_ref(), prev.dl, prev.d, r);
            self.tensors[i] = Tensor::from_matrix(sp.vh.as_ref(), r, d, dr);
            if let (Some(ch), Some(q)) = (self.charges.as_mut(), sp.charges) {
                ch[i] = q;
            }
            self.center -= 1;
        }
        while self.center < target {
            let i = self.center;
            let t = &self.tensors[i];
            let (dl, d) = (t.dl, t.d);
            let q = self.charges.as_ref().map(|ch| {
                let rows: Vec<i32> = (0..dl * d).map(|j| ch[i][j / d] + self.phys_charge(i, j % d)).collect();
                (rows, ch[i + 1].clone())
            });
            let sp = split(t.left_matrix(), q.as_ref().map(|(r, c)| (r.as_slice(), c.as_slice())), Truncation::EXACT)?;
            let r = sp.s.len();
            let next = &self.tensors[i + 1];
            let svh = sp.svh();
            let merged = matmul(svh.as_ref(), next.right_matrix());
            self.tensors[i + 1] = Tensor::from_matrix(merged.as_ref(), r, next.d, next.dr);
            self.tensors[i] = Tensor::from_matrix(sp.u.as_ref(), dl, d, r);
            if let (Some(ch), Some(q)) = (self.charges.as_mut(), sp.charges) {
                ch[i + 1] = q;
            }
            self.center += 1;
        }
        Ok(())
    }

    /// Exchanges the sites at `i` and `i + 1`; the center must be on one of
    /// them and ends on `i + 1` if `center_right`. Returns the discarded
    /// weight.
    pub(crate) fn swap(&mut self, i: usize, trunc: Truncation, center_right: bool) -> MpsResult<f64> {
        debug_assert!(self.center == i || self.center == i + 1);
        let (x, y) = (&self.tensors[i], &self.tensors[i + 1]);
        let (dl, dx, dy, dr) = (x.dl, x.d, y.d, y.dr);
        let theta = matmul(x.left_matrix(), y.right_matrix());
        // θ[(a, n_x), (n_y, b)] → [(a, n_y), (n_x, b)]
        let perm = Mat::from_fn(dl * dy, dx * dr, |r, c| {
            let (a, ny) = (r / dy, r % dy);
            let (nx, b) = (c / dr, c % dr);
            theta[(a * dx + nx, ny * dr + b)]
        });
        let q = self.charges.as_ref().map(|ch| {
            let rows: Vec<i32> = (0..dl * dy).map(|r| ch[i][r / dy] + self.phys_charge(i + 1, r % dy)).collect();
            let cols: Vec<i32> = (0..dx * dr).map(|c| ch[i + 2][c % dr] - self.phys_charge(i, c / dr)).collect();
            (rows, cols)
        });
        let sp = split(perm.as_ref(), q.as_ref().map(|(r, c)| (r.as_slice(), c.as_slice())), trunc)?;
        let r = sp.s.len();
        if center_right {
            self.tensors[i] = Tensor::from_matrix(sp.u.as_ref(), dl, dy, r);
            self.tensors[i + 1] = Tensor::from_matrix(sp.svh().as_ref(), r, dx, dr);
            self.center = i + 1;
        } else {
            self.tensors[i] = Tensor::from_matrix(sp.us().as_ref(), dl, dy, r);
            self.tensors[i + 1] = Tensor::from_matrix(sp.vh.as_ref(), r, dx, dr);
            self.center = i;
        }
        if let (Some(ch), Some(q)) = (self.charges.as_mut(), sp.charges) {
            ch[i + 1] = q;
        }
        let (lx, ly) = (self.labels[i], self.labels[i + 1]);
        self.set_label(i, ly);
        self.set_label(i + 1, lx);
        Ok(sp.discarded)
    }

    /// Applies `gate` to the sites `(p−1, p, p+1)`, whose combined basis is
    /// ordered `(n_{p−1}, n_p, n_{p+1})`, and writes the result back with the
    /// last two sites exchanged. The center must be at `p − 1` and ends at
    /// `p` if `center_right`, else at `p − 1`.
    pub(crate) fn apply_three_site(&mut self, p: usize, gate: MatRef<'_, C>, trunc: Truncation, center_right: bool) -> MpsResult<f64> {
        debug_assert_eq!(self.center, p - 1);
        let (a0, a1, a2) = (&self.tensors[p - 1], &self.tensors[p], &self.tensors[p + 1]);
        let (dl, d0, d1, d2, dr) = (a0.dl, a0.d, a1.d, a2.d, a2.dr);
        let x = d0 * d1 * d2;
        debug_assert_eq!(gate.nrows(), x);
        let t01 = matmul(a0.left_matrix(), a1.right_matrix());
        let t01 = Tensor::from_matrix(t01.as_ref(), dl * d0, d1, a1.dr);
        let theta = matmul(t01.left_matrix(), a2.right_matrix());
        // row-major [a][x][b] with x = (n0, n1, n2)
        let mut data = vec![ZERO; dl * x * dr];
        for a in 0..dl {
            for n01 in 0..d0 * d1 {
                for n2 in 0..d2 {
                    for b in 0..dr {
                        data[(a * x + n01 * d2 + n2) * dr + b] = theta[(a * d0 * d1 + n01, n2 * dr + b)];
                    }
                }
            }
        }
        let mut out = vec![ZERO; dl * x * dr];
        for a in 0..dl {
            let blk = MatRef::from_row_major_slice(&data[a * x * dr..(a + 1) * x * dr], x, dr);
            let g = matmul(gate, blk);
            for xi in 0..x {
                for b in 0..dr {
                    out[(a * x + xi) * dr + b] = g[(xi, b)];
                }
            }
        }
        // first split: (a, n0, n2) | (n1, b)
        let m1 = Mat::from_fn(dl * d0 * d2, d1 * dr, |r, c| {
            let (a, n0, n2) = (r / (d0 * d2), (r / d2) % d0, r % d2);
            let (n1, b) = (c / dr, c % dr);
            out[(a * x + (n0 * d1 + n1) * d2 + n2) * dr + b]
        });
        let q1 = self.charges.as_ref().map(|ch| {
            let rows: Vec<i32> = (0..dl * d0 * d2)
                .map(|r| ch[p - 1][r / (d0 * d2)] + self.phys_charge(p - 1, (r / d2) % d0) + self.phys_charge(p + 1, r % d2))
                .collect();
            let cols: Vec<i32> = (0..d1 * dr).map(|c| ch[p + 2][c % dr] - self.phys_charge(p, c / dr)).collect();
            (rows, cols)
        });
        let s1 = split(m1.as_ref(), q1.as_ref().map(|(r, c)| (r.as_slice(), c.as_slice())), trunc)?;
        let r1 = s1.s.len();
        let us1 = s1.us();
        // second split: (a, n0) | (n2, r1)
        let m2 = Mat::from_fn(dl * d0, d2 * r1, |r, c| us1[(r * d2 + c / r1, c % r1)]);
        let q2 = match (self.charges.as_ref(), s1.charges.as_ref()) {
            (Some(ch), Some(c1)) => {
                let rows: Vec<i32> = (0..dl * d0).map(|r| ch[p - 1][r / d0] + self.phys_charge(p - 1, r % d0)).collect();
                let cols: Vec<i32> = (0..d2 * r1).map(|c| c1[c % r1] - self.phys_charge(p + 1, c / r1)).collect();
                Some((rows, cols))
            }
            _ => None,
        };
        let s2 = split(m2.as_ref(), q2.as_ref().map(|(r, c)| (r.as_slice(), c.as_slice())), trunc)?;
        let r2 = s2.s.len();
        self.tensors[p + 1] = Tensor::from_matrix(s1.vh.as_ref(), r1, d1, dr);
        if center_right {
            self.tensors[p - 1] = Tensor::from_matrix(s2.u.as_ref(), dl, d0, r2);
            self.tensors[p] = Tensor::from_matrix(s2.svh().as_ref(), r2, d2, r1);
            self.center = p;
        } else {
            self.tensors[p - 1] = Tensor::from_matrix(s2.us().as_ref(), dl, d0, r2);
            self.tensors[p] = Tensor::from_matrix(s2.vh.as_ref(), r2, d2, r1);
            self.center = p - 1;
        }
        if let Some(ch) = self.charges.as_mut() {
            ch[p] = s2.charges.unwrap_or_default();
            ch[p + 1] = s1.charges.unwrap_or_default();
        }
        let (l1, l2) = (self.labels[p], self.labels[p + 1]);
        self.set_label(p, l2);
        self.set_label(p + 1, l1);
        Ok(s1.discarded + s2.discarded)
    }

    /// Raw amplitude `⟨n_0 n_1 …|ψ⟩` for an occupation list in chain order.
    /// Exponential in nothing, linear in the chain length; for tests.
    pub fn amplitude(&self, occupation: &[usize]) -> Complex64 {
        assert_eq!(occupation.len(), self.n_sites());
        let mut v = vec![C::new(1.0, 0.0)];
        for (t, &n) in self.tensors.iter().zip(occupation) {
            let mut w = vec![ZERO; t.dr];
            if n < t.d {
                for (a, va) in v.iter().enumerate() {
                    for (b, wb) in w.iter_mut().enumerate() {
                        *wb += va * t.at(a, n, b);
                    }
                }
            }
            v = w;
        }
        v[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::StepScheme;

    pub(crate) fn small_config(m: usize, n: usize) -> (MpsConfig, ModelParams) {
        let p = ModelParams::two_level(0.0, m as f64 * 0.1, 0.0, 0.0).unwrap();
        let c = MpsConfig {
            dt: 0.1,
            n_steps: n,
            delay_bins: m,
            max_bond: 64,
            trunc_threshold: 1e-12,
            bin_cutoff: 3,
            tail_bins: 2,
            step_budget: 1e-4,
            scheme: StepScheme::Symmetric,
        };
        (c, p)
    }

    fn occupation(s: &MpsState, bins: &[(usize, usize)]) -> Vec<usize> {
        let mut occ = vec![0; s.n_sites()];
        for &(j, n) in bins {
            occ[s.bin_pos[j]] = n;
        }
        occ
    }

    #[test]
    fn two_photon_amplitudes() {
        let (c, p) = small_config(2, 4);
        let s = build_two_photon_mps(&c, &p).unwrap();
        assert!((s.norm() - 1.0).abs() < 1e-12);
        assert_eq!(s.center, 0);
        // packet bins are 2..6
        let a11 = s.amplitude(&occupation(&s, &[(2, 1), (4, 1)]));
        let a2 = s.amplitude(&occupation(&s, &[(3, 2)]));
        assert!((a11 / a2 - 2f64.sqrt()).norm() < 1e-12);
        assert!((a2.norm() - 0.25).abs() < 1e-12);
        assert!(s.amplitude(&occupation(&s, &[(2, 1)])).norm() < 1e-14);
        assert!(s.amplitude(&occupation(&s, &[(0, 1), (3, 1)])).norm() < 1e-14);
    }

    #[test]
    fn two_bin_packet() {
        let p = ModelParams::two_level(0.0, 0.1, 0.0, 0.0).unwrap();
        let c = MpsConfig { dt: 0.1, n_steps: 2, delay_bins: 1, max_bond: 8, trunc_threshold: 0.0, bin_cutoff: 3, tail_bins: 0, step_budget: 1e-4, scheme: StepScheme::Symmetric };
        let s = build_two_photon_mps(&c, &p).unwrap();
        let a20 = s.amplitude(&occupation(&s, &[(1, 2)]));
        let a02 = s.amplitude(&occupation(&s, &[(2, 2)]));
        let a11 = s.amplitude(&occupation(&s, &[(1, 1), (2, 1)]));
        assert!((a20.norm() - 0.5).abs() < 1e-12);
        assert!((a02.norm() - 0.5).abs() < 1e-12);
        assert!((a11.norm() - 1.0 / 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn one_photon_amplitudes() {
        let (c, p) = small_config(2, 5);
        let s = build_one_photon_mps(&c, &p).unwrap();
        assert!((s.norm() - 1.0).abs() < 1e-12);
        for j in 2..7 {
            let a = s.amplitude(&occupation(&s, &[(j, 1)]));
            assert!((a.norm() - 1.0 / 5f64.sqrt()).abs() < 1e-12);
        }
        assert!(s.amplitude(&occupation(&s, &[(2, 1), (3, 1)])).norm() < 1e-14);
        assert!(build_state(&c, &p, 3, EmitterInit::Ground).is_err());
    }

    #[test]
    fn swaps_preserve_amplitudes() {
        let (c, p) = small_config(2, 4);
        let mut s = build_two_photon_mps(&c, &p).unwrap();
        let before = s.amplitude(&occupation(&s, &[(3, 1), (5, 1)]));
        s.move_center_to(3).unwrap();
        s.swap(3, Truncation::EXACT, true).unwrap();
        s.swap(4, Truncation::EXACT, false).unwrap();
        assert_eq!(s.labels[3], Site::Bin(3));
        assert_eq!(s.labels[5], Site::Bin(2));
        let after = s.amplitude(&occupation(&s, &[(3, 1), (5, 1)]));
        assert!((before - after).norm() < 1e-12);
        assert!((s.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn excited_emitter_shifts_charges() {
        let (c, p) = small_config(1, 3);
        let s = build_state(&c, &p, 0, EmitterInit::Excited(1)).unwrap();
        let ch = s.charges.as_ref().unwrap();
        assert_eq!(ch[0], vec![0]);
        assert_eq!(*ch.last().unwrap(), vec![1]);
        assert!(build_state(&c, &p, 0, EmitterInit::Excited(2)).is_err());
    }
}

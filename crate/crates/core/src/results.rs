//! Result containers shared by the analytic and MPS engines.

use serde::{Deserialize, Serialize};

use crate::numerics::linspace;

/// Power spectrum of the scattered two-photon field.
///
/// `inelastic[i]` is `S̃(grid[i]) = S_inel(ν)·(γT)²`, which does not depend on
/// the wavepacket length. `elastic_weight` is the coefficient of `δ(ν)` in
/// `S_el` for a packet of length `T` (in units of `γ` when `γ = 1`), present
/// only when `T` is known.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralResult {
    pub elastic_weight: Option<f64>,
    pub grid: Vec<f64>,
    pub inelastic: Vec<f64>,
    /// Grid indices whose value could not be evaluated (stored as NaN).
    pub flagged: Vec<usize>,
}

impl SpectralResult {
    pub fn peak(&self) -> Option<(usize, f64)> {
        self.inelastic
            .iter()
            .copied()
            .enumerate()
            .filter(|(_, v)| v.is_finite())
            .max_by(|a, b| a.1.total_cmp(&b.1))
    }

    /// Trapezoid integral of the finite values over the grid.
    pub fn integral(&self) -> f64 {
        self.grid
            .windows(2)
            .zip(self.inelastic.windows(2))
            .filter(|(_, v)| v[0].is_finite() && v[1].is_finite())
            .map(|(x, v)| 0.5 * (x[1] - x[0]) * (v[0] + v[1]))
            .sum()
    }

    /// Restriction to `|ν| ≤ limit`.
    pub fn restrict(&self, limit: f64) -> SpectralResult {
        let keep: Vec<usize> = (0..self.grid.len()).filter(|&i| self.grid[i].abs() <= limit).collect();
        SpectralResult {
            elastic_weight: self.elastic_weight,
            grid: keep.iter().map(|&i| self.grid[i]).collect(),
            inelastic: keep.iter().map(|&i| self.inelastic[i]).collect(),
            flagged: keep.iter().enumerate().filter(|(_, &i)| self.flagged.contains(&i)).map(|(j, _)| j).collect(),
        }
    }
}

/// Normalized second-order correlation `g²(t)` of the scattered field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    /// Indices of the grid points nearest to `t = nτ`, `n ≥ 1`.
    pub delay_marks: Vec<usize>,
    pub flagged: Vec<usize>,
}

/// Indices of `grid` nearest to each positive multiple of `tau` inside it.
pub fn delay_marks(grid: &[f64], tau: f64) -> Vec<usize> {
    if tau <= 0.0 || grid.is_empty() {
        return Vec::new();
    }
    let t_max = grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut marks = Vec::new();
    let mut n = 1;
    while n as f64 * tau <= t_max {
        let target = n as f64 * tau;
        let idx = (0..grid.len())
            .min_by(|&a, &b| (grid[a] - target).abs().total_cmp(&(grid[b] - target).abs()))
            .unwrap();
        marks.push(idx);
        n += 1;
    }
    marks
}

/// `n` points symmetric about zero on `[-nu_max, nu_max]`.
pub fn symmetric_grid(nu_max: f64, n: usize) -> Vec<f64> {
    let mut g = linspace(-nu_max, nu_max, n);
    // exact antisymmetry so that S̃(ν) and S̃(−ν) are evaluated at negated points
    let len = g.len();
    for i in 0..len / 2 {
        g[len - 1 - i] = -g[i];
    }
    if len % 2 == 1 {
        g[len / 2] = 0.0;
    }
    g
}

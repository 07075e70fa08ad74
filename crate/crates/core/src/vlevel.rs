//! Chirally coupled V-level emitter: transition 1 emits towards the
//! mirror, transition 2 away from it, so each photon meets the emitter
//! twice with a delay `τ` in between.
//!
//! Closed forms are implemented for equal detunings `δ₁ = δ₂ = δ`, where
//! the general expressions have removable `1/(λ₂ − λ₁)` singularities.
//! Nothing here depends on the feedback phase.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{AnalyticError, AnalyticResult};
use crate::model::ModelParams;
use crate::numerics::{exp_divided_difference, phi1, phi1_prime};
use crate::results::{delay_marks, CorrelationResult, SpectralResult};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// `λ_χ = δ_χ + iγ/2`.
pub fn v_lambdas(params: &ModelParams) -> AnalyticResult<(Complex64, Complex64)> {
    let (d1, d2) = params.v_deltas()?;
    let h = 0.5 * params.gamma;
    Ok((Complex64::new(d1, h), Complex64::new(d2, h)))
}

fn unit_phase(l: Complex64) -> Complex64 {
    let n = l.norm();
    if n <= 1e-300 {
        Complex64::new(1.0, 0.0)
    } else {
        l / n
    }
}

/// Single-photon transmission `s = λ₁*λ₂*/(λ₁λ₂)`, a pure phase.
pub fn elastic_amplitude_v(params: &ModelParams) -> AnalyticResult<Complex64> {
    let (l1, l2) = v_lambdas(params)?;
    let (u1, u2) = (unit_phase(l1), unit_phase(l2));
    Ok((u1 * u2).conj() / (u1 * u2))
}

/// `F₁(ν) = −(2πi/λ)[(e^{iντ} − e^{iλτ})/(ν − λ) − (e^{iντ} − 1)/ν]` for
/// `λ = λ_χ`.
pub fn f1(nu: f64, lambda: Complex64, tau: f64) -> Complex64 {
    let n = Complex64::new(nu, 0.0);
    -(2.0 * PI * I / lambda) * (exp_divided_difference(n, lambda, tau) - exp_divided_difference(n, ZERO, tau))
}

// g(z) = (e^{izτ} − 1)/z
fn g_fn(z: Complex64, tau: f64) -> Complex64 {
    I * tau * phi1(I * z * tau)
}

fn g_prime(z: Complex64, tau: f64) -> Complex64 {
    -tau * tau * phi1_prime(I * z * tau)
}

/// `F₂(ν) = 4π²/(λ₁(ν − λ₂)) [g(ν + λ₁) − g(λ₁ + λ₂) − g(ν) + g(λ₂)]` with
/// `g(z) = (e^{izτ} − 1)/z`; regular at `ν = λ₂`.
pub fn f2(nu: f64, l1: Complex64, l2: Complex64, tau: f64) -> Complex64 {
    let n = Complex64::new(nu, 0.0);
    let big_g = |z: Complex64| g_fn(z + l1, tau) - g_fn(z, tau);
    let h = n - l2;
    let dd = if h.norm() * tau.max(1.0 / l1.norm().max(1e-300)) < 1e-3 {
        // three-point Gauss–Legendre for ∫₀¹ G′(λ₂ + sh) ds
        let r = 0.5 * (0.6f64).sqrt();
        [(0.5 - r, 5.0 / 18.0), (0.5, 8.0 / 18.0), (0.5 + r, 5.0 / 18.0)]
            .iter()
            .map(|(s, w)| {
                let z = l2 + *s * h;
                *w * (g_prime(z + l1, tau) - g_prime(z, tau))
            })
            .sum()
    } else {
        (big_g(n) - big_g(l2)) / h
    };
    4.0 * PI * PI / l1 * dd
}

/// Equal-detuning data: `λ`, `a = iγ`, `E = e^{iλτ}`, `K = aE + 2λ*`.
struct Equal {
    l: Complex64,
    lc: Complex64,
    a: Complex64,
    e: Complex64,
    k: Complex64,
    tau: f64,
}

fn equal(params: &ModelParams) -> AnalyticResult<Option<Equal>> {
    let (d1, d2) = params.v_deltas()?;
    if d1 != d2 {
        return Err(AnalyticError::UnsupportedConfiguration(format!(
            "V-level closed forms require δ₁ = δ₂ (got {d1}, {d2})"
        )));
    }
    if params.gamma == 0.0 {
        return Ok(None);
    }
    let l = Complex64::new(d1, 0.5 * params.gamma);
    let a = I * params.gamma;
    let e = (I * l * params.tau).exp();
    Ok(Some(Equal { l, lc: l.conj(), a, e, k: a * e + 2.0 * l.conj(), tau: params.tau }))
}

impl Equal {
    fn t_hat(&self, nu: f64) -> Complex64 {
        let Equal { l, lc, a, e, k, tau } = *self;
        let n2 = nu * nu;
        let d = l * l - n2;
        let p0 = e * e * a * a * d + 2.0 * e * lc * a * d - (l + lc) * (l * l * (l - 3.0 * lc) + n2 * (l + lc));
        let num = -2.0 * I * l * (l * lc - n2) * k * (nu * tau).cos() + 2.0 * l * nu * a * k * (nu * tau).sin() - I * p0;
        a * a * num / (l * l * l * d * d)
    }

    // (1/2π)∫ t̂(ν) cos νt dν
    fn transform(&self, t: f64) -> Complex64 {
        let Equal { l, lc, a, e: y, k, tau } = *self;
        let t = t.abs();
        let (h1, h2) = if t > tau {
            (1.0, 0.0)
        } else if t < tau {
            (0.0, 1.0)
        } else {
            (0.5, 0.5)
        };
        let l3 = l * l * l;
        let l4 = l3 * l;
        let a2 = a * a;
        let a3 = a2 * a;
        let q = 3.0 * l * l * y * y - 4.0 * l * lc * y * y + 6.0 * l * lc * y + 4.0 * l * lc + lc * lc * y * y
            - 2.0 * lc * lc * y
            + 4.0 * lc * lc;
        let mut out = (I * l * t).exp() * (-I * a3 * (l + lc) * t / (2.0 * l3) - a2 * q / (4.0 * l4));
        if h1 > 0.0 {
            out += h1
                * (I * l * (t - tau)).exp()
                * (-I * a3 * k * t / (2.0 * l3) + I * a2 * k * (2.0 * l * a * tau + I * (l + lc)) / (4.0 * l4));
        }
        if h2 > 0.0 {
            out += h2 * (I * l * (tau - t)).exp() * (-a2 * (l + lc) * k / (4.0 * l4));
        }
        out
    }
}

/// Inelastic amplitude `t̂(ν)` for `δ₁ = δ₂`; `S̃(ν) = γ²|t̂(ν)|²/π`.
pub fn t_hat_v(nu: f64, params: &ModelParams) -> AnalyticResult<Complex64> {
    Ok(equal(params)?.map_or(ZERO, |e| e.t_hat(nu)))
}

/// `S̃(ν)` on `grid` for `δ₁ = δ₂`.
pub fn inelastic_spectrum_v(grid: &[f64], params: &ModelParams) -> AnalyticResult<SpectralResult> {
    let eq = equal(params)?;
    let g2 = params.gamma * params.gamma;
    let inelastic = grid.iter().map(|nu| eq.as_ref().map_or(0.0, |e| g2 * e.t_hat(*nu).norm_sqr() / PI)).collect();
    Ok(SpectralResult { elastic_weight: None, grid: grid.to_vec(), inelastic, flagged: Vec::new() })
}

/// As [`inelastic_spectrum_v`] with the elastic weight for `γT = gamma_t`.
pub fn spectrum_v_with_elastic(grid: &[f64], params: &ModelParams, gamma_t: f64) -> AnalyticResult<SpectralResult> {
    let mut r = inelastic_spectrum_v(grid, params)?;
    r.elastic_weight = Some(elastic_weight_v(params, gamma_t)?);
    Ok(r)
}

/// `2/T + (4/T²) Re([s*]² t̂(0))` with `T = gamma_t/γ`.
pub fn elastic_weight_v(params: &ModelParams, gamma_t: f64) -> AnalyticResult<f64> {
    if !(gamma_t > 0.0) || !(params.gamma > 0.0) {
        return Err(AnalyticError::InvalidArgument(format!(
            "elastic weight needs γT > 0 and γ > 0 (γT = {gamma_t}, γ = {})",
            params.gamma
        )));
    }
    let t = gamma_t / params.gamma;
    let s = elastic_amplitude_v(params)?;
    let th = t_hat_v(0.0, params)?;
    Ok(2.0 / t + 4.0 / (t * t) * (s.conj() * s.conj() * th).re)
}

/// `S̃(ν)` at `δ₁ = δ₂ = 0`.
pub fn closed_form_v_delta0(nu: f64, params: &ModelParams) -> AnalyticResult<f64> {
    let (d1, d2) = params.v_deltas()?;
    if d1 != 0.0 || d2 != 0.0 {
        return Err(AnalyticError::UnsupportedConfiguration(format!("closed form requires δ₁ = δ₂ = 0 (got {d1}, {d2})")));
    }
    let g = params.gamma;
    if !(g > 0.0) {
        return Err(AnalyticError::InvalidArgument("closed form requires γ > 0".into()));
    }
    let tau = params.tau;
    let x = nu * tau;
    let s = 4.0 * nu * nu + g * g;
    let h = (0.5 * g * tau).exp();
    let bracket = s + h * ((4.0 * nu * nu - g * g) * x.cos() + 4.0 * nu * g * x.sin());
    Ok(4.0 * (-2.0 * g * tau).exp() * (4.0 * g).powi(4) * (h - 1.0).powi(2) / (PI * s.powi(4)) * bracket * bracket)
}

/// `g²(t) = ½|1 + (1/2π)∫t̂(ν) cos νt dν / s²|²` for `δ₁ = δ₂`.
pub fn g2_v(grid: &[f64], params: &ModelParams) -> AnalyticResult<CorrelationResult> {
    if grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(AnalyticError::InvalidArgument("g² grid must contain finite t ≥ 0".into()));
    }
    let eq = equal(params)?;
    let s = elastic_amplitude_v(params)?;
    let values = grid
        .iter()
        .map(|t| {
            let k = eq.as_ref().map_or(ZERO, |e| e.transform(*t));
            0.5 * (1.0 + k / (s * s)).norm_sqr()
        })
        .collect();
    Ok(CorrelationResult { grid: grid.to_vec(), values, delay_marks: delay_marks(grid, params.tau), flagged: Vec::new() })
}

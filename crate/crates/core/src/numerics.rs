//! Small numerical kernels: removable-singularity helpers, a Cauchy
//! contour average for even functions of a branch variable, and adaptive
//! Gauss–Kronrod quadrature for complex integrands.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;
use thiserror::Error;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `(e^z − 1)/z`, exact to rounding including `z → 0`.
pub fn phi1(z: Complex64) -> Complex64 {
    let r = z.norm();
    if r < 0.1 {
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = term;
        for k in 2..20 {
            term *= z / k as f64;
            sum += term;
            if term.norm() < 1e-18 * sum.norm() {
                break;
            }
        }
        sum
    } else {
        z.exp_m1() / z
    }
}

trait ExpM1 {
    fn exp_m1(self) -> Self;
}

impl ExpM1 for Complex64 {
    // e^{a+ib} − 1 = (e^a − 1)cos b + (cos b − 1) + i e^a sin b
    fn exp_m1(self) -> Self {
        let (a, b) = (self.re, self.im);
        let em1 = a.exp_m1();
        let cm1 = -2.0 * (0.5 * b).sin().powi(2);
        Complex64::new(em1 * b.cos() + cm1, a.exp() * b.sin())
    }
}

/// `(e^{iaτ} − e^{ibτ})/(a − b)`, continuous through `a = b` where it equals
/// `iτ e^{iaτ}`.
pub fn exp_divided_difference(a: Complex64, b: Complex64, tau: f64) -> Complex64 {
    (I * b * tau).exp() * I * tau * phi1(I * (a - b) * tau)
}

/// `sin x / x`.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// `d/dw [(e^w − 1)/w] = (w e^w − e^w + 1)/w²`.
pub fn phi1_prime(w: Complex64) -> Complex64 {
    if w.norm() < 0.5 {
        // Σ_{j≥1} j w^{j−1}/(j+1)!
        let mut pow = Complex64::new(1.0, 0.0);
        let mut fact = 2.0;
        let mut sum = Complex64::new(0.0, 0.0);
        for j in 1..30 {
            let term = pow * (j as f64 / fact);
            sum += term;
            if term.norm() < 1e-18 * sum.norm() {
                break;
            }
            pow *= w;
            fact *= (j + 2) as f64;
        }
        sum
    } else {
        let e = w.exp();
        (w * e - w.exp_m1()) / (w * w)
    }
}

/// Nodes and weights that reproduce `h(p)` from samples on a circle of
/// radius `r > |p|`, for `h` analytic and even inside the circle. Only one
/// node of each `±z` pair is stored; its weight absorbs the partner.
#[derive(Clone, Debug)]
pub struct EvenContour {
    pub nodes: Vec<Complex64>,
    pub weights: Vec<Complex64>,
}

impl EvenContour {
    /// Trapezoid rule in `u = z²` on `|u| = r²` with `k/2` points, i.e. the
    /// Cauchy integral with `k` nodes in `z`. Error `≈ (|p|/r)^k`.
    pub fn new(p: Complex64, radius: f64, k: usize) -> Self {
        assert!(k >= 4 && k % 2 == 0);
        assert!(p.norm() < radius);
        let half = k / 2;
        let mut nodes = Vec::with_capacity(half);
        let mut weights = Vec::with_capacity(half);
        let p2 = p * p;
        for j in 0..half {
            let theta = std::f64::consts::TAU * (j as f64 + 0.5) / k as f64;
            let z = Complex64::from_polar(radius, theta);
            let z2 = z * z;
            nodes.push(z);
            weights.push(2.0 * z2 / (k as f64 * (z2 - p2)));
        }
        Self { nodes, weights }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("adaptive quadrature stopped at error estimate {estimate:e} (tolerance {tolerance:e}) after {intervals} intervals")]
pub struct QuadratureError {
    pub estimate: f64,
    pub tolerance: f64,
    pub intervals: usize,
    pub value: Complex64,
}

#[derive(Clone, Copy, Debug)]
pub struct QuadratureOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self { abs_tol: 1e-10, rel_tol: 1e-10, max_intervals: 20_000 }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Quadrature {
    pub value: Complex64,
    pub error: f64,
    pub intervals: usize,
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: FnMut(f64) -> Complex64>(f: &mut F, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kron += s * WGK[j];
        if j % 2 == 1 {
            gauss += s * WG[j / 2];
        }
    }
    let kron = kron * h;
    let gauss = gauss * h;
    (kron, (kron - gauss).norm())
}

struct Segment {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive G7/K15 over `[points[0], points[last]]`; interior
/// points are mandatory breakpoints.
pub fn integrate<F: FnMut(f64) -> Complex64>(
    mut f: F,
    points: &[f64],
    opts: QuadratureOptions,
) -> Result<Quadrature, QuadratureError> {
    assert!(points.len() >= 2, "need at least two points");
    let mut heap = BinaryHeap::new();
    let mut total = Complex64::new(0.0, 0.0);
    let mut err = 0.0;
    for w in points.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let (value, error) = gk15(&mut f, w[0], w[1]);
        total += value;
        err += error;
        heap.push(Segment { a: w[0], b: w[1], value, error });
    }
    loop {
        let tol = opts.abs_tol.max(opts.rel_tol * total.norm());
        if err <= tol {
            return Ok(Quadrature { value: total, error: err, intervals: heap.len() });
        }
        if heap.len() >= opts.max_intervals {
            return Err(QuadratureError { estimate: err, tolerance: tol, intervals: heap.len(), value: total });
        }
        let worst = heap.pop().expect("heap is non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval can no longer be split in floating point
            heap.push(worst);
            return Err(QuadratureError { estimate: err, tolerance: tol, intervals: heap.len(), value: total });
        }
        let (v1, e1) = gk15(&mut f, worst.a, mid);
        let (v2, e2) = gk15(&mut f, mid, worst.b);
        total += v1 + v2 - worst.value;
        err += e1 + e2 - worst.error;
        heap.push(Segment { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: worst.b, value: v2, error: e2 });
    }
}

/// Sorts, removes duplicates and clips breakpoints to `[lo, hi]`.
pub fn breakpoints(lo: f64, hi: f64, interior: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut pts: Vec<f64> = interior.into_iter().filter(|x| *x > lo && *x < hi).collect();
    pts.push(lo);
    pts.push(hi);
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * (1.0 + b.abs()));
    pts
}

/// Uniform grid with `n` points on `[a, b]`.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => {
            let h = (b - a) / (n - 1) as f64;
            (0..n).map(|i| if i == n - 1 { b } else { a + h * i as f64 }).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol * (1.0 + b.norm())
    }

    #[test]
    fn phi1_small_and_large_agree_at_switch() {
        for &arg in &[0.0, 0.7, 1.9, 3.0] {
            let z_lo = Complex64::from_polar(0.0999999, arg);
            let z_hi = Complex64::from_polar(0.1000001, arg);
            assert!(close(phi1(z_lo), phi1(z_hi), 1e-6));
            let direct = (z_hi.exp() - 1.0) / z_hi;
            assert!(close(phi1(z_hi), direct, 1e-14));
        }
        assert_eq!(phi1(Complex64::new(0.0, 0.0)), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn divided_difference_limit() {
        let a = Complex64::new(0.3, 0.2);
        let v = exp_divided_difference(a, a, 2.0);
        let expect = I * 2.0 * (I * a * 2.0).exp();
        assert!(close(v, expect, 1e-15));
    }

    #[test]
    fn phi1_prime_matches_finite_difference() {
        for &w in &[Complex64::new(0.1, 0.2), Complex64::new(0.49, -0.1), Complex64::new(2.0, 1.0), Complex64::new(0.51, 0.0)] {
            let h = 1e-6;
            let fd = (phi1(w + h) - phi1(w - h)) / (2.0 * h);
            assert!(close(phi1_prime(w), fd, 1e-8), "{w}");
        }
    }

    #[test]
    fn contour_reproduces_even_function() {
        let h = |z: Complex64| (z * z).cos() + 1.0 / (3.0 - z * z);
        let p = Complex64::new(0.02, -0.01);
        let c = EvenContour::new(p, 0.1, 32);
        let v: Complex64 = c.nodes.iter().zip(&c.weights).map(|(z, w)| w * h(*z)).sum();
        assert!(close(v, h(p), 1e-14));
    }

    #[test]
    fn gauss_kronrod_oscillatory() {
        let q = integrate(|x| (I * 7.0 * x).exp(), &[0.0, 3.0], QuadratureOptions::default()).unwrap();
        let exact = ((I * 21.0).exp() - 1.0) / (I * 7.0);
        assert!(close(q.value, exact, 1e-12));
    }

    #[test]
    fn gauss_kronrod_near_pole_with_breakpoints() {
        // ∫_{-1}^{1} dx/(x + iη) = -2i atan(1/η)
        let eta = 1e-4;
        let pts = breakpoints(-1.0, 1.0, [-10.0 * eta, -eta, 0.0, eta, 10.0 * eta]);
        let opts = QuadratureOptions { abs_tol: 1e-11, rel_tol: 1e-12, max_intervals: 5000 };
        let q = integrate(|x| 1.0 / Complex64::new(x, eta), &pts, opts).unwrap();
        let exact = Complex64::new(0.0, -2.0 * (1.0 / eta).atan());
        assert!(close(q.value, exact, 1e-10));
    }

    #[test]
    fn quadrature_reports_non_convergence() {
        let opts = QuadratureOptions { abs_tol: 1e-14, rel_tol: 0.0, max_intervals: 3 };
        let r = integrate(|x| Complex64::new((50.0 * x).sin(), 0.0), &[0.0, 10.0], opts);
        assert!(r.is_err());
    }

    proptest! {
        #[test]
        fn phi1_satisfies_definition(re in -5.0f64..5.0, im in -5.0f64..5.0) {
            let z = Complex64::new(re, im);
            prop_assume!(z.norm() > 1e-3);
            let direct = (z.exp() - 1.0) / z;
            prop_assert!(close(phi1(z), direct, 1e-11));
        }

        #[test]
        fn divided_difference_symmetric(a in -3.0f64..3.0, b in -3.0f64..3.0, tau in 0.0f64..5.0) {
            let (za, zb) = (Complex64::new(a, 0.1), Complex64::new(b, 0.4));
            let d1 = exp_divided_difference(za, zb, tau);
            let d2 = exp_divided_difference(zb, za, tau);
            prop_assert!(close(d1, d2, 1e-12));
        }
    }
}

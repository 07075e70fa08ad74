//! Site tensors and charge-aware truncated SVD.

use faer::{Mat, MatRef};
use num_complex::Complex64;

use crate::error::{MpsError, MpsResult};

pub(crate) type C = Complex64;
pub(crate) const ZERO: C = C::new(0.0, 0.0);

/// Rank-3 site tensor `A[a, n, b]` stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Tensor {
    pub dl: usize,
    pub d: usize,
    pub dr: usize,
    pub data: Vec<C>,
}

impl Tensor {
    pub fn zeros(dl: usize, d: usize, dr: usize) -> Self {
        Self { dl, d, dr, data: vec![ZERO; dl * d * dr] }
    }

    #[inline]
    pub fn at(&self, a: usize, n: usize, b: usize) -> C {
        self.data[(a * self.d + n) * self.dr + b]
    }

    #[inline]
    pub fn at_mut(&mut self, a: usize, n: usize, b: usize) -> &mut C {
        &mut self.data[(a * self.d + n) * self.dr + b]
    }

    /// `(dl·d) × dr` view.
    pub fn left_matrix(&self) -> MatRef<'_, C> {
        MatRef::from_row_major_slice(&self.data, self.dl * self.d, self.dr)
    }

    /// `dl × (d·dr)` view.
    pub fn right_matrix(&self) -> MatRef<'_, C> {
        MatRef::from_row_major_slice(&self.data, self.dl, self.d * self.dr)
    }

    pub fn from_matrix(m: MatRef<'_, C>, dl: usize, d: usize, dr: usize) -> Self {
        debug_assert_eq!(m.nrows() * m.ncols(), dl * d * dr);
        let cols = m.ncols();
        let mut data = Vec::with_capacity(dl * d * dr);
        for i in 0..m.nrows() {
            for j in 0..cols {
                data.push(m[(i, j)]);
            }
        }
        Self { dl, d, dr, data }
    }
}

pub(crate) fn matmul(a: MatRef<'_, C>, b: MatRef<'_, C>) -> Mat<C> {
    a * b
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Truncation {
    pub max_bond: usize,
    pub threshold: f64,
}

impl Truncation {
    /// Drops only numerically vanishing singular values.
    pub const EXACT: Truncation = Truncation { max_bond: usize::MAX, threshold: 0.0 };
}

/// `θ ≈ U diag(s) V†` with `U` of size rows × r and `V†` of size r × cols.
pub(crate) struct Split {
    pub u: Mat<C>,
    pub s: Vec<f64>,
    pub vh: Mat<C>,
    pub charges: Option<Vec<i32>>,
    pub discarded: f64,
}

impl Split {
    /// `U diag(s)`.
    pub fn us(&self) -> Mat<C> {
        Mat::from_fn(self.u.nrows(), self.u.ncols(), |i, k| self.u[(i, k)] * self.s[k])
    }

    /// `diag(s) V†`.
    pub fn svh(&self) -> Mat<C> {
        Mat::from_fn(self.vh.nrows(), self.vh.ncols(), |k, j| self.vh[(k, j)] * self.s[k])
    }
}

struct Block {
    charge: i32,
    rows: Vec<usize>,
    cols: Vec<usize>,
    u: Mat<C>,
    vh: Mat<C>,
}

fn svd(m: MatRef<'_, C>) -> MpsResult<(Mat<C>, Vec<f64>, Mat<C>)> {
    let f = m.thin_svd().map_err(|e| MpsError::Linalg(format!("SVD failed: {e:?}")))?;
    let s: Vec<f64> = f.S().column_vector().iter().map(|x| x.re).collect();
    if s.iter().any(|x| !x.is_finite()) {
        return Err(MpsError::Linalg("SVD produced non-finite singular values".into()));
    }
    Ok((f.U().to_owned(), s, f.V().adjoint().to_owned()))
}

/// Truncated SVD. With charges, rows and columns are grouped by the charge
/// of the new bond (`θ` must vanish between different charges) and each
/// block is decomposed separately.
pub(crate) fn split(
    theta: MatRef<'_, C>,
    charges: Option<(&[i32], &[i32])>,
    trunc: Truncation,
) -> MpsResult<Split> {
    let (rows, cols) = (theta.nrows(), theta.ncols());
    let mut blocks = Vec::new();
    match charges {
        None => {
            let (u, s, vh) = svd(theta)?;
            blocks.push((Block { charge: 0, rows: (0..rows).collect(), cols: (0..cols).collect(), u, vh }, s));
        }
        Some((rq, cq)) => {
            debug_assert_eq!(rq.len(), rows);
            debug_assert_eq!(cq.len(), cols);
            let mut qs: Vec<i32> = rq.to_vec();
            qs.sort_unstable();
            qs.dedup();
            for q in qs {
                let r: Vec<usize> = (0..rows).filter(|&i| rq[i] == q).collect();
                let c: Vec<usize> = (0..cols).filter(|&j| cq[j] == q).collect();
                if c.is_empty() {
                    continue;
                }
                let sub = Mat::from_fn(r.len(), c.len(), |i, j| theta[(r[i], c[j])]);
                let (u, s, vh) = svd(sub.as_ref())?;
                blocks.push((Block { charge: q, rows: r, cols: c, u, vh }, s));
            }
        }
    }

    let mut all: Vec<(f64, usize, usize)> = Vec::new();
    for (bi, (_, s)) in blocks.iter().enumerate() {
        for (k, &x) in s.iter().enumerate() {
            all.push((x, bi, k));
        }
    }
    all.sort_by(|a, b| b.0.total_cmp(&a.0));
    let smax = all.first().map_or(0.0, |x| x.0);

    // smallest r whose discarded tail stays within the threshold
    let mut keep = all.len();
    let mut tail = 0.0;
    while keep > 1 {
        let x = all[keep - 1].0;
        let w = x * x;
        let negligible = x <= 1e-14 * smax;
        if !negligible && tail + w > trunc.threshold {
            break;
        }
        tail += w;
        keep -= 1;
    }
    let keep = keep.min(trunc.max_bond).max(1);
    let discarded: f64 = all[keep..].iter().map(|x| x.0 * x.0).sum();

    let mut u = Mat::<C>::zeros(rows, keep);
    let mut vh = Mat::<C>::zeros(keep, cols);
    let mut s = Vec::with_capacity(keep);
    let mut bond_q = Vec::with_capacity(keep);
    for (k, &(x, bi, kk)) in all[..keep].iter().enumerate() {
        let (b, _) = &blocks[bi];
        for (i, &r) in b.rows.iter().enumerate() {
            u[(r, k)] = b.u[(i, kk)];
        }
        for (j, &c) in b.cols.iter().enumerate() {
            vh[(k, c)] = b.vh[(kk, j)];
        }
        s.push(x);
        bond_q.push(b.charge);
    }
    Ok(Split { u, s, vh, charges: charges.map(|_| bond_q), discarded })
}

/// Hermitian `h`: returns `exp(−i h)`.
pub(crate) fn expm_hermitian(h: MatRef<'_, C>) -> MpsResult<Mat<C>> {
    let n = h.nrows();
    let e = h
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| MpsError::Linalg(format!("eigendecomposition failed: {e:?}")))?;
    let v = e.U();
    let w: Vec<f64> = e.S().column_vector().iter().map(|x| x.re).collect();
    let scaled = Mat::from_fn(n, n, |i, k| v[(i, k)] * C::from_polar(1.0, -w[k]));
    Ok(&scaled * v.adjoint())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn frob(m: MatRef<'_, C>) -> f64 {
        let mut s = 0.0;
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                s += m[(i, j)].norm_sqr();
            }
        }
        s.sqrt()
    }

    #[test]
    fn exact_split_reconstructs() {
        let m = Mat::from_fn(6, 5, |i, j| c((i * 7 + j * 3) as f64 % 5.0 - 2.0, (i + 2 * j) as f64 % 3.0));
        let s = split(m.as_ref(), None, Truncation::EXACT).unwrap();
        let r = &s.us() * &s.vh;
        assert!(frob((&r - &m).as_ref()) < 1e-12 * frob(m.as_ref()));
        assert!(s.discarded < 1e-20);
    }

    #[test]
    fn block_split_matches_dense() {
        let rq = [0, 1, 1, 2, 1];
        let cq = [1, 0, 2, 1, 1, 2];
        let m = Mat::from_fn(5, 6, |i, j| if rq[i] == cq[j] { c(1.0 + i as f64, (j as f64) - 2.5) } else { ZERO });
        let dense = split(m.as_ref(), None, Truncation::EXACT).unwrap();
        let block = split(m.as_ref(), Some((&rq, &cq)), Truncation::EXACT).unwrap();
        for (a, b) in dense.s.iter().zip(&block.s) {
            assert!((a - b).abs() < 1e-12);
        }
        let r = &block.us() * &block.vh;
        assert!(frob((&r - &m).as_ref()) < 1e-12);
        let q = block.charges.unwrap();
        for k in 0..q.len() {
            for i in 0..5 {
                if block.u[(i, k)].norm() > 0.0 {
                    assert_eq!(rq[i], q[k]);
                }
            }
        }
    }

    #[test]
    fn truncation_respects_cap_and_threshold() {
        let m = Mat::from_fn(4, 4, |i, j| if i == j { c([1.0, 1e-3, 1e-7, 0.0][i], 0.0) } else { ZERO });
        let s = split(m.as_ref(), None, Truncation { max_bond: 10, threshold: 1e-12 }).unwrap();
        assert_eq!(s.s.len(), 2);
        assert!((s.discarded - 1e-14).abs() < 1e-20);
        let s = split(m.as_ref(), None, Truncation { max_bond: 1, threshold: 0.0 }).unwrap();
        assert_eq!(s.s.len(), 1);
        assert!((s.discarded - 1e-6 - 1e-14).abs() < 1e-15);
    }

    #[test]
    fn exponential_is_unitary() {
        let h = Mat::from_fn(5, 5, |i, j| {
            let x = c((i + j) as f64 * 0.3, (i as f64 - j as f64) * 0.7);
            if i == j { c(x.re, 0.0) } else { x }
        });
        let u = expm_hermitian(h.as_ref()).unwrap();
        let id = &u * u.adjoint();
        let e = Mat::<C>::identity(5, 5);
        assert!(frob((&id - &e).as_ref()) < 1e-13);
    }
}

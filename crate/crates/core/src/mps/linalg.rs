//! Thin wrappers over faer's dense factorizations, on row-major buffers.

use std::sync::Once;

use faer::Mat;

use crate::error::{Error, Result};
use crate::C64;

static SEQUENTIAL: Once = Once::new();

/// Factorizations run single-threaded so results never depend on the pool
/// size; parallelism lives at the ensemble level.
fn init() {
    SEQUENTIAL.call_once(|| faer::set_global_parallelism(faer::Par::Seq));
}

pub(crate) fn to_mat(rows: usize, cols: usize, data: &[C64]) -> Mat<C64> {
    debug_assert_eq!(data.len(), rows * cols);
    Mat::from_fn(rows, cols, |i, j| data[i * cols + j])
}

pub(crate) fn to_vec(m: &Mat<C64>) -> Vec<C64> {
    let (rows, cols) = (m.nrows(), m.ncols());
    let mut out = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            out.push(m[(i, j)]);
        }
    }
    out
}

/// Row-major product of `(m x k)` and `(k x n)` buffers.
pub(crate) fn matmul(m: usize, k: usize, n: usize, a: &[C64], b: &[C64]) -> Vec<C64> {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    if m * k * n <= 4096 {
        let mut out = vec![C64::new(0.0, 0.0); m * n];
        for i in 0..m {
            let row = &mut out[i * n..(i + 1) * n];
            for (p, &x) in a[i * k..(i + 1) * k].iter().enumerate() {
                if x == C64::new(0.0, 0.0) {
                    continue;
                }
                for (o, &y) in row.iter_mut().zip(&b[p * n..(p + 1) * n]) {
                    *o += x * y;
                }
            }
        }
        return out;
    }
    init();
    let prod = &to_mat(m, k, a) * &to_mat(k, n, b);
    to_vec(&prod)
}

/// Thin QR of a row-major `(m x n)` buffer: `(Q: m x k, R: k x n)`, `k = min(m, n)`.
pub(crate) fn qr(m: usize, n: usize, a: &[C64]) -> (Vec<C64>, Vec<C64>, usize) {
    init();
    let mat = to_mat(m, n, a);
    let f = mat.qr();
    let q = f.compute_thin_Q();
    let r = f.thin_R().to_owned();
    let k = m.min(n);
    (to_vec(&q), to_vec(&r), k)
}

/// Thin LQ of a row-major `(m x n)` buffer: `(L: m x k, Q: k x n)` with
/// orthonormal rows in `Q`.
pub(crate) fn lq(m: usize, n: usize, a: &[C64]) -> (Vec<C64>, Vec<C64>, usize) {
    init();
    let mat = to_mat(m, n, a);
    let f = mat.adjoint().to_owned().qr();
    let q = f.compute_thin_Q().adjoint().to_owned();
    let l = f.thin_R().adjoint().to_owned();
    (to_vec(&l), to_vec(&q), m.min(n))
}

/// Thin SVD `A = U diag(s) Vh` of a row-major `(m x n)` buffer.
pub(crate) struct Svd {
    pub u: Vec<C64>,
    pub s: Vec<f64>,
    pub vh: Vec<C64>,
    pub k: usize,
}

impl Svd {
    /// First `keep` columns of `U` scaled by the singular values, `(m x keep)`.
    pub fn us(&self, m: usize, keep: usize) -> Vec<C64> {
        let mut out = Vec::with_capacity(m * keep);
        for i in 0..m {
            for j in 0..keep {
                out.push(self.u[i * self.k + j] * self.s[j]);
            }
        }
        out
    }

    pub fn u_cols(&self, m: usize, keep: usize) -> Vec<C64> {
        let mut out = Vec::with_capacity(m * keep);
        for i in 0..m {
            out.extend_from_slice(&self.u[i * self.k..i * self.k + keep]);
        }
        out
    }

    /// First `keep` rows of `Vh`, optionally scaled by the singular values.
    pub fn vh_rows(&self, n: usize, keep: usize, scaled: bool) -> Vec<C64> {
        let mut out = self.vh[..keep * n].to_vec();
        if scaled {
            for j in 0..keep {
                for x in &mut out[j * n..(j + 1) * n] {
                    *x *= self.s[j];
                }
            }
        }
        out
    }
}

/// Widest side handled by one-sided Jacobi instead of faer.
const JACOBI_MAX_SIDE: usize = 4;

pub(crate) fn svd(m: usize, n: usize, a: &[C64]) -> Result<Svd> {
    init();
    if m.min(n) > 0 && m.min(n) <= JACOBI_MAX_SIDE {
        if let Some(f) = jacobi_any(m, n, a) {
            return Ok(f);
        }
    }
    match faer_svd(m, n, a) {
        Some(f) => Ok(f),
        // faer occasionally fails on rank-deficient blocks with clustered
        // singular values (error or NaN in U); Jacobi is slow but robust there.
        None => jacobi_any(m, n, a)
            .ok_or_else(|| Error::NumericalFailure(format!("SVD of a {m}x{n} block did not converge"))),
    }
}

fn faer_svd(m: usize, n: usize, a: &[C64]) -> Option<Svd> {
    let f = to_mat(m, n, a).thin_svd().ok()?;
    let k = m.min(n);
    let s: Vec<f64> = (0..k).map(|j| f.S().column_vector()[j].re).collect();
    let u = to_vec(&f.U().to_owned());
    let vh = to_vec(&f.V().adjoint().to_owned());
    let finite = s.iter().all(|x| x.is_finite()) && u.iter().chain(&vh).all(|z| z.re.is_finite() && z.im.is_finite());
    finite.then_some(Svd { u, s, vh, k })
}

/// [`jacobi_svd`] for either orientation.
fn jacobi_any(m: usize, n: usize, a: &[C64]) -> Option<Svd> {
    if m >= n {
        return jacobi_svd(m, n, a);
    }
    let mut at = vec![C64::new(0.0, 0.0); m * n];
    for i in 0..m {
        for j in 0..n {
            at[j * m + i] = a[i * n + j].conj();
        }
    }
    let f = jacobi_svd(n, m, &at)?;
    // A^H = U S V^H  =>  A = V S U^H.
    let k = f.k;
    let mut u = vec![C64::new(0.0, 0.0); m * k];
    for i in 0..m {
        for j in 0..k {
            u[i * k + j] = f.vh[j * m + i].conj();
        }
    }
    let mut vh = vec![C64::new(0.0, 0.0); k * n];
    for j in 0..k {
        for c in 0..n {
            vh[j * n + c] = f.u[c * k + j].conj();
        }
    }
    Some(Svd { u, s: f.s, vh, k })
}

/// Hestenes one-sided Jacobi SVD for `m >= n`. Returns `None` for a zero or
/// non-finite matrix, or when 60 sweeps do not converge.
fn jacobi_svd(m: usize, n: usize, a: &[C64]) -> Option<Svd> {
    // Column-major working copy.
    let mut cols: Vec<Vec<C64>> = (0..n).map(|j| (0..m).map(|i| a[i * n + j]).collect()).collect();
    let mut v: Vec<Vec<C64>> =
        (0..n).map(|j| (0..n).map(|i| C64::new(if i == j { 1.0 } else { 0.0 }, 0.0)).collect()).collect();
    let mut norms: Vec<f64> = cols.iter().map(|c| c.iter().map(|x| x.norm_sqr()).sum()).collect();
    if norms.iter().all(|&x| x == 0.0) || norms.iter().any(|x| !x.is_finite()) {
        return None;
    }
    let mut converged = false;
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (alpha, beta) = (norms[p], norms[q]);
                let gamma: C64 = cols[p].iter().zip(&cols[q]).map(|(x, y)| x.conj() * y).sum();
                let g = gamma.norm();
                if g == 0.0 || g <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let e = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let ec = e.conj();
                let (lo, hi) = cols.split_at_mut(q);
                for (x, y) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
                    let yq = *y * ec;
                    let xp = *x;
                    *x = xp * c - yq * s;
                    *y = xp * s + yq * c;
                }
                let (lo, hi) = v.split_at_mut(q);
                for (x, y) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
                    let yq = *y * ec;
                    let xp = *x;
                    *x = xp * c - yq * s;
                    *y = xp * s + yq * c;
                }
                norms[p] = cols[p].iter().map(|x| x.norm_sqr()).sum();
                norms[q] = cols[q].iter().map(|x| x.norm_sqr()).sum();
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return None;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));
    let k = n;
    let s: Vec<f64> = order.iter().map(|&j| norms[j].sqrt()).collect();
    let mut u = vec![C64::new(0.0, 0.0); m * k];
    let mut vh = vec![C64::new(0.0, 0.0); k * n];
    for (jj, &j) in order.iter().enumerate() {
        let inv = if s[jj] > 0.0 { 1.0 / s[jj] } else { 0.0 };
        for i in 0..m {
            u[i * k + jj] = cols[j][i] * inv;
        }
        for c in 0..n {
            vh[jj * n + c] = v[j][c].conj();
        }
    }
    Some(Svd { u, s, vh, k })
}

/// Number of singular values to keep: at most `cap`, at least one, dropping
/// values at or below `rel_cut * s[0]`.
pub(crate) fn keep_count(s: &[f64], cap: usize, rel_cut: f64) -> usize {
    let s0 = s.first().copied().unwrap_or(0.0);
    let nonzero = s.iter().take_while(|&&x| x > rel_cut * s0 && x > 0.0).count();
    nonzero.min(cap).max(1)
}

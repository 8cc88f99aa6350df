//! Diagonal matrix-product operators.
//!
//! A diagonal operator `D = sum_s d(s) |s><s|` is stored as a chain of
//! [`SiteTensor`]s whose physical index runs over the diagonal, i.e. the same
//! layout as an MPS of `d`. Products of diagonal MPOs are elementwise in the
//! physical index and Kronecker products on the bonds.

use crate::error::{invalid, Error, Result};
use crate::graph::Graph;
use crate::C64;

use super::linalg::{keep_count, lq, matmul, svd};
use super::state::validate_ordering;
use super::tensor::SiteTensor;

/// Default cap on any MPO bond dimension.
pub const DEFAULT_MPO_BOND_CAP: usize = 1 << 12;

/// Relative singular-value cutoff used when compressing MPOs.
pub const MPO_COMPRESSION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalMpo {
    tensors: Vec<SiteTensor>,
}

fn one() -> C64 {
    C64::new(1.0, 0.0)
}

/// `z = +1` for bit 0, `-1` for bit 1.
fn z(bit: usize) -> f64 {
    if bit == 0 {
        1.0
    } else {
        -1.0
    }
}

impl DiagonalMpo {
    pub fn identity(n: usize) -> Self {
        DiagonalMpo { tensors: (0..n).map(|_| SiteTensor::product(one(), one())).collect() }
    }

    pub fn n_sites(&self) -> usize {
        self.tensors.len()
    }

    pub fn tensors(&self) -> &[SiteTensor] {
        &self.tensors
    }

    pub fn bond_dims(&self) -> Vec<usize> {
        self.tensors[..self.tensors.len() - 1].iter().map(|t| t.right).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    /// `exp(-i theta z_a z_b / 2)` between chain sites `a != b`, bond dimension 2
    /// on the bonds between them.
    pub fn zz_edge(n: usize, site_a: usize, site_b: usize, theta: f64) -> Result<Self> {
        if site_a >= n || site_b >= n || site_a == site_b {
            return Err(invalid(format!("invalid edge sites ({site_a},{site_b}) for {n} sites")));
        }
        let (a, b) = (site_a.min(site_b), site_a.max(site_b));
        let mut mpo = Self::identity(n);
        let mut first = SiteTensor::zeros(1, 2);
        let (i0, i1) = (first.idx(0, 0, 0), first.idx(0, 1, 1));
        first.data[i0] = one();
        first.data[i1] = one();
        mpo.tensors[a] = first;
        for k in a + 1..b {
            let mut t = SiteTensor::zeros(2, 2);
            for c in 0..2 {
                for s in 0..2 {
                    let i = t.idx(c, s, c);
                    t.data[i] = one();
                }
            }
            mpo.tensors[k] = t;
        }
        let mut last = SiteTensor::zeros(2, 1);
        for c in 0..2 {
            for s in 0..2 {
                let i = last.idx(c, s, 0);
                last.data[i] = C64::from_polar(1.0, -0.5 * theta * z(c) * z(s));
            }
        }
        mpo.tensors[b] = last;
        Ok(mpo)
    }

    /// Operator product; bonds multiply.
    pub fn product(&self, other: &DiagonalMpo) -> Result<Self> {
        if self.n_sites() != other.n_sites() {
            return Err(invalid("MPO lengths differ"));
        }
        let tensors = self
            .tensors
            .iter()
            .zip(&other.tensors)
            .map(|(x, y)| {
                let (l, r) = (x.left * y.left, x.right * y.right);
                let mut t = SiteTensor::zeros(l, r);
                for xl in 0..x.left {
                    for yl in 0..y.left {
                        for s in 0..2 {
                            for (xr, &xv) in x.row(xl, s).iter().enumerate() {
                                if xv == C64::new(0.0, 0.0) {
                                    continue;
                                }
                                for (yr, &yv) in y.row(yl, s).iter().enumerate() {
                                    let i = t.idx(xl * y.left + yl, s, xr * y.right + yr);
                                    t.data[i] = xv * yv;
                                }
                            }
                        }
                    }
                }
                t
            })
            .collect();
        Ok(DiagonalMpo { tensors })
    }

    /// Right-to-left LQ sweep, then a left-to-right SVD sweep dropping singular
    /// values below `rel_tol` times the largest on each bond.
    pub fn compress(&mut self, rel_tol: f64) -> Result<()> {
        let n = self.n_sites();
        for i in (1..n).rev() {
            let (l, r) = (self.tensors[i].left, self.tensors[i].right);
            let (lmat, q, k) = lq(l, 2 * r, &self.tensors[i].data);
            self.tensors[i] = SiteTensor::new(k, r, q);
            let prev = &self.tensors[i - 1];
            let l0 = prev.left;
            let data = matmul(2 * l0, l, k, &prev.data, &lmat);
            self.tensors[i - 1] = SiteTensor::new(l0, k, data);
        }
        for i in 0..n.saturating_sub(1) {
            let (l, r) = (self.tensors[i].left, self.tensors[i].right);
            let f = svd(2 * l, r, &self.tensors[i].data)?;
            let keep = keep_count(&f.s, usize::MAX, rel_tol);
            self.tensors[i] = SiteTensor::new(l, keep, f.u_cols(2 * l, keep));
            let next = &self.tensors[i + 1];
            let r2 = next.right;
            let data = matmul(keep, r, 2 * r2, &f.vh_rows(r, keep, true), &next.data);
            self.tensors[i + 1] = SiteTensor::new(keep, r2, data);
        }
        Ok(())
    }

    /// `exp(-i gamma C / 2)` for the graph placed on the chain by `ordering`,
    /// built exactly and then compressed.
    pub fn cost_layer(g: &Graph, gamma: f64, ordering: &[usize], bond_cap: usize) -> Result<Self> {
        let mut mpo = Self::cost_layer_uncompressed(g, gamma, ordering, bond_cap)?;
        mpo.compress(MPO_COMPRESSION_TOL)?;
        Ok(mpo)
    }

    /// The cost layer before compression.
    ///
    /// The bond after site `k` carries the bits of every site `x <= k` that
    /// still has an edge to a site beyond `k`; each edge phase is applied at
    /// its right endpoint. This equals the product of all single-edge MPOs
    /// with their copy bits shared.
    pub fn cost_layer_uncompressed(g: &Graph, gamma: f64, ordering: &[usize], bond_cap: usize) -> Result<Self> {
        let n = g.n_vertices();
        validate_ordering(ordering, n)?;
        // Edges in site coordinates, left endpoint first.
        let edges: Vec<(usize, usize, f64)> = g
            .edges()
            .iter()
            .map(|e| {
                let (a, b) = (ordering[e.i], ordering[e.j]);
                (a.min(b), a.max(b), e.w)
            })
            .collect();
        let mut frontiers: Vec<Vec<usize>> = Vec::with_capacity(n + 1);
        frontiers.push(Vec::new());
        for k in 0..n {
            let f: Vec<usize> = (0..=k).filter(|&x| edges.iter().any(|&(a, b, _)| a == x && b > k)).collect();
            if f.len() >= usize::BITS as usize || (1usize << f.len()) > bond_cap {
                return Err(Error::ResourceLimit(format!(
                    "cost-layer MPO bond 2^{} after site {k} exceeds the cap {bond_cap}",
                    f.len()
                )));
            }
            frontiers.push(f);
        }
        let mut tensors = Vec::with_capacity(n);
        for k in 0..n {
            let (fin, fout) = (&frontiers[k], &frontiers[k + 1]);
            let incoming: Vec<(usize, f64)> = edges
                .iter()
                .filter(|&&(_, b, _)| b == k)
                .map(|&(a, _, w)| (fin.iter().position(|&x| x == a).expect("edge source is on the frontier"), w))
                .collect();
            let mut t = SiteTensor::zeros(1 << fin.len(), 1 << fout.len());
            for a in 0..1usize << fin.len() {
                for s in 0..2 {
                    let phase: f64 = incoming.iter().map(|&(pos, w)| w * z((a >> pos) & 1) * z(s)).sum();
                    let mut b = 0usize;
                    for (pos, &y) in fout.iter().enumerate() {
                        let bit = if y == k { s } else { (a >> fin.iter().position(|&x| x == y).unwrap()) & 1 };
                        b |= bit << pos;
                    }
                    let i = t.idx(a, s, b);
                    t.data[i] = C64::from_polar(1.0, -0.5 * gamma * phase);
                }
            }
            tensors.push(t);
        }
        Ok(DiagonalMpo { tensors })
    }

    /// Same operator as [`DiagonalMpo::cost_layer`], built as a running product
    /// of single-edge MPOs with compression after every factor.
    pub fn cost_layer_by_edges(g: &Graph, gamma: f64, ordering: &[usize], bond_cap: usize) -> Result<Self> {
        let n = g.n_vertices();
        validate_ordering(ordering, n)?;
        let mut mpo = Self::identity(n);
        for e in g.edges() {
            let edge = Self::zz_edge(n, ordering[e.i], ordering[e.j], gamma * e.w)?;
            mpo = mpo.product(&edge)?;
            if mpo.max_bond() > bond_cap {
                return Err(Error::ResourceLimit(format!(
                    "intermediate MPO bond {} exceeds the cap {bond_cap}",
                    mpo.max_bond()
                )));
            }
            mpo.compress(MPO_COMPRESSION_TOL)?;
        }
        Ok(mpo)
    }

    /// Dense diagonal indexed by chain-site bits (site `k` is bit `k`).
    pub fn diagonal(&self) -> Vec<C64> {
        let n = self.n_sites();
        let mut out = Vec::with_capacity(1 << n);
        for idx in 0..1usize << n {
            let mut v = vec![one()];
            for (k, t) in self.tensors.iter().enumerate() {
                let s = (idx >> k) & 1;
                let mut next = vec![C64::new(0.0, 0.0); t.right];
                for (l, &x) in v.iter().enumerate() {
                    for (o, &a) in next.iter_mut().zip(t.row(l, s)) {
                        *o += x * a;
                    }
                }
                v = next;
            }
            out.push(v[0]);
        }
        out
    }
}

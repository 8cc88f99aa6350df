use crate::error::{invalid, Error, Result};
use crate::graph::{BitString, Graph};
use crate::oracle::{StateVector, DEFAULT_SV_CAP};
use crate::C64;

use super::gate::GateMatrix;
use super::linalg::{keep_count, lq, matmul, qr, svd};
use super::mpo::{DiagonalMpo, DEFAULT_MPO_BOND_CAP};
use super::tensor::SiteTensor;

/// Singular values at or below this fraction of the largest one are treated
/// as exact zeros.
pub const SCHMIDT_CUTOFF: f64 = 1e-14;

/// Norm deviation tolerated by operations that require a normalized state.
pub const NORMALIZED_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TruncationReport {
    /// Sum of squared dropped singular values.
    pub discarded_weight: f64,
    pub max_bond_after: usize,
}

impl TruncationReport {
    pub fn absorb(&mut self, other: TruncationReport) {
        self.discarded_weight += other.discarded_weight;
        self.max_bond_after = other.max_bond_after;
    }
}

/// `2^floor(n/2)`, saturating.
pub fn exact_chi(n: usize) -> usize {
    1usize.checked_shl((n / 2) as u32).unwrap_or(usize::MAX)
}

pub fn validate_ordering(ordering: &[usize], n: usize) -> Result<()> {
    if ordering.len() != n {
        return Err(invalid(format!("ordering has length {}, expected {n}", ordering.len())));
    }
    let mut seen = vec![false; n];
    for &s in ordering {
        if s >= n || seen[s] {
            return Err(invalid("ordering is not a permutation"));
        }
        seen[s] = true;
    }
    Ok(())
}

pub(crate) const PAULI_Z: [C64; 4] =
    [C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(-1.0, 0.0)];
pub(crate) const PAULI_Y: [C64; 4] =
    [C64::new(0.0, 0.0), C64::new(0.0, -1.0), C64::new(0.0, 1.0), C64::new(0.0, 0.0)];
const IDENTITY: [C64; 4] =
    [C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0)];

/// Matrix-product state on a chain of qubits with a bond-dimension cap.
///
/// `ordering[v]` is the chain site holding graph vertex `v`. The state is not
/// renormalized after truncation; `norm_tracked` follows its squared norm.
#[derive(Debug, Clone, PartialEq)]
pub struct MpsState {
    pub(crate) tensors: Vec<SiteTensor>,
    pub(crate) chi_max: usize,
    pub(crate) norm_tracked: f64,
    pub(crate) ordering: Vec<usize>,
    pub(crate) site_vertex: Vec<usize>,
    /// Orthogonality center, when every tensor to its left is left-orthonormal
    /// and every tensor to its right is right-orthonormal.
    pub(crate) center: Option<usize>,
}

impl MpsState {
    /// `H^{(x)N} |0...0>` with all bonds of dimension 1.
    pub fn plus_state(n: usize, ordering: Vec<usize>, chi_max: usize) -> Result<Self> {
        let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self::product(n, ordering, chi_max, |_| (h, h))
    }

    /// Computational basis state; `s` is indexed by vertex.
    pub fn basis_state(s: &BitString, ordering: Vec<usize>, chi_max: usize) -> Result<Self> {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let bits = s.bits().to_vec();
        Self::product(s.len(), ordering, chi_max, |v| if bits[v] == 0 { (one, zero) } else { (zero, one) })
    }

    fn product(
        n: usize,
        ordering: Vec<usize>,
        chi_max: usize,
        amp: impl Fn(usize) -> (C64, C64),
    ) -> Result<Self> {
        if n == 0 {
            return Err(invalid("an MPS needs at least one site"));
        }
        validate_ordering(&ordering, n)?;
        if chi_max == 0 {
            return Err(invalid("chi_max must be at least 1"));
        }
        let mut site_vertex = vec![0; n];
        for (v, &s) in ordering.iter().enumerate() {
            site_vertex[s] = v;
        }
        let tensors = site_vertex
            .iter()
            .map(|&v| {
                let (a0, a1) = amp(v);
                SiteTensor::product(a0, a1)
            })
            .collect();
        Ok(MpsState {
            tensors,
            chi_max: chi_max.min(exact_chi(n)),
            norm_tracked: 1.0,
            ordering,
            site_vertex,
            center: Some(0),
        })
    }

    /// Builds a state from explicit site tensors (chain order).
    pub fn from_tensors(tensors: Vec<SiteTensor>, ordering: Vec<usize>, chi_max: usize) -> Result<Self> {
        let n = tensors.len();
        if n == 0 {
            return Err(invalid("an MPS needs at least one site"));
        }
        validate_ordering(&ordering, n)?;
        if chi_max == 0 {
            return Err(invalid("chi_max must be at least 1"));
        }
        if tensors[0].left != 1 || tensors[n - 1].right != 1 {
            return Err(invalid("boundary bonds must have dimension 1"));
        }
        for w in tensors.windows(2) {
            if w[0].right != w[1].left {
                return Err(invalid("adjacent bond dimensions disagree"));
            }
        }
        if tensors.iter().any(|t| t.data.len() != t.left * 2 * t.right) {
            return Err(invalid("tensor buffer has the wrong length"));
        }
        let mut site_vertex = vec![0; n];
        for (v, &s) in ordering.iter().enumerate() {
            site_vertex[s] = v;
        }
        let mut st = MpsState {
            tensors,
            chi_max: chi_max.min(exact_chi(n)),
            norm_tracked: 0.0,
            ordering,
            site_vertex,
            center: None,
        };
        st.norm_tracked = st.norm_squared();
        Ok(st)
    }

    /// MPS of a dense state (vertex `v` is bit `v` of the index) by sequential
    /// SVDs from the right, keeping at most `chi_max` singular values per bond.
    ///
    /// This is the right-to-left truncation sweep of [`MpsState::truncate_sweep`]
    /// applied to the exact state: the unsplit left block plays the role of the
    /// left-orthonormal tensors. The center ends on site 0.
    pub fn from_dense(amps: &[C64], ordering: Vec<usize>, chi_max: usize) -> Result<(Self, TruncationReport)> {
        let n = amps.len().trailing_zeros() as usize;
        if n == 0 || amps.len() != 1 << n {
            return Err(invalid("dense state length must be a power of two >= 2"));
        }
        validate_ordering(&ordering, n)?;
        if chi_max == 0 {
            return Err(invalid("chi_max must be at least 1"));
        }
        let chi_max = chi_max.min(exact_chi(n));
        // `m` is `2^(i+1) x k`: rows index sites 0..=i (site bits), columns the bond right of i.
        let mut m = vec![C64::new(0.0, 0.0); amps.len()];
        for (idx, &a) in amps.iter().enumerate() {
            let mut site_idx = 0;
            for (v, &s) in ordering.iter().enumerate() {
                site_idx |= ((idx >> v) & 1) << s;
            }
            m[site_idx] = a;
        }
        let mut k = 1;
        let mut discarded = 0.0;
        let mut tensors = vec![SiteTensor::zeros(1, 1); n];
        for i in (1..n).rev() {
            let rows = 1usize << i;
            // Move site i from the row index into the columns: `rows x (2 k)`.
            let mut split = vec![C64::new(0.0, 0.0); rows * 2 * k];
            for r in 0..rows {
                for s in 0..2 {
                    let src = (r + s * rows) * k;
                    split[r * 2 * k + s * k..r * 2 * k + s * k + k].copy_from_slice(&m[src..src + k]);
                }
            }
            let f = svd(rows, 2 * k, &split)?;
            let keep = keep_count(&f.s, chi_max, SCHMIDT_CUTOFF);
            discarded += f.s[keep..].iter().map(|x| x * x).sum::<f64>();
            tensors[i] = SiteTensor::new(keep, k, f.vh_rows(2 * k, keep, false));
            m = f.us(rows, keep);
            k = keep;
        }
        tensors[0] = SiteTensor::new(1, k, m);
        let mut site_vertex = vec![0; n];
        for (v, &s) in ordering.iter().enumerate() {
            site_vertex[s] = v;
        }
        let st = MpsState {
            norm_tracked: tensors[0].norm_sqr(),
            tensors,
            chi_max,
            ordering,
            site_vertex,
            center: Some(0),
        };
        let rep = st.report(discarded);
        Ok((st, rep))
    }

    pub fn n_sites(&self) -> usize {
        self.tensors.len()
    }

    pub fn chi_max(&self) -> usize {
        self.chi_max
    }

    /// Changes the bond cap for later truncations; existing bonds are untouched.
    pub fn set_chi_max(&mut self, chi_max: usize) -> Result<()> {
        if chi_max == 0 {
            return Err(invalid("chi_max must be at least 1"));
        }
        self.chi_max = chi_max.min(exact_chi(self.n_sites()));
        Ok(())
    }

    pub fn norm_tracked(&self) -> f64 {
        self.norm_tracked
    }

    pub fn ordering(&self) -> &[usize] {
        &self.ordering
    }

    pub fn site_of(&self, vertex: usize) -> usize {
        self.ordering[vertex]
    }

    pub fn vertex_at(&self, site: usize) -> usize {
        self.site_vertex[site]
    }

    pub fn tensors(&self) -> &[SiteTensor] {
        &self.tensors
    }

    /// Internal bond dimensions `b_1 .. b_{N-1}`.
    pub fn bond_dims(&self) -> Vec<usize> {
        self.tensors[..self.tensors.len() - 1].iter().map(|t| t.right).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site >= self.n_sites() {
            return Err(invalid(format!("site {site} out of range for {} sites", self.n_sites())));
        }
        Ok(())
    }

    fn report(&self, discarded: f64) -> TruncationReport {
        TruncationReport { discarded_weight: discarded, max_bond_after: self.max_bond() }
    }

    /// QR step moving the center from `i` to `i + 1`.
    fn qr_right(&mut self, i: usize) {
        let (l, r) = (self.tensors[i].left, self.tensors[i].right);
        let (q, rmat, k) = qr(2 * l, r, &self.tensors[i].data);
        self.tensors[i] = SiteTensor::new(l, k, q);
        let next = &self.tensors[i + 1];
        let r2 = next.right;
        let data = matmul(k, r, 2 * r2, &rmat, &next.data);
        self.tensors[i + 1] = SiteTensor::new(k, r2, data);
    }

    /// LQ step moving the center from `i` to `i - 1`.
    fn lq_left(&mut self, i: usize) {
        let (l, r) = (self.tensors[i].left, self.tensors[i].right);
        let (lmat, q, k) = lq(l, 2 * r, &self.tensors[i].data);
        self.tensors[i] = SiteTensor::new(k, r, q);
        let prev = &self.tensors[i - 1];
        let l0 = prev.left;
        let data = matmul(2 * l0, l, k, &prev.data, &lmat);
        self.tensors[i - 1] = SiteTensor::new(l0, k, data);
    }

    /// Brings the state into mixed-canonical form with center `target`.
    pub fn canonicalize_to(&mut self, target: usize) {
        let n = self.n_sites();
        assert!(target < n);
        match self.center {
            None => {
                for i in 0..target {
                    self.qr_right(i);
                }
                for i in (target + 1..n).rev() {
                    self.lq_left(i);
                }
            }
            Some(c) if c < target => {
                for i in c..target {
                    self.qr_right(i);
                }
            }
            Some(c) => {
                for i in (target + 1..=c).rev() {
                    self.lq_left(i);
                }
            }
        }
        self.center = Some(target);
    }

    pub fn apply_single_qubit(&mut self, site: usize, gate: &GateMatrix) -> Result<()> {
        self.check_site(site)?;
        if gate.dim() != 2 {
            return Err(invalid("single-qubit gate must have dimension 2"));
        }
        self.tensors[site].apply_physical(gate.entries());
        if !gate.is_unitary() {
            if self.center != Some(site) {
                self.center = None;
            }
            self.norm_tracked = self.norm_squared();
        }
        Ok(())
    }

    /// Contracts `gate` into sites `(left_site, left_site + 1)`, splits by SVD
    /// and keeps at most `chi_max` singular values without renormalizing.
    pub fn apply_two_qubit_adjacent(&mut self, left_site: usize, gate: &GateMatrix) -> Result<TruncationReport> {
        if left_site + 1 >= self.n_sites() {
            return Err(invalid(format!("no site to the right of {left_site}")));
        }
        if gate.dim() != 4 {
            return Err(invalid("two-qubit gate must have dimension 4"));
        }
        let i = left_site;
        self.canonicalize_to(i);
        let (l, m, r) = (self.tensors[i].left, self.tensors[i].right, self.tensors[i + 1].right);
        let theta = matmul(2 * l, m, 2 * r, &self.tensors[i].data, &self.tensors[i + 1].data);
        let g = gate.entries();
        let mut out = vec![C64::new(0.0, 0.0); theta.len()];
        for li in 0..l {
            for s1 in 0..2 {
                for s2 in 0..2 {
                    let row = 2 * s1 + s2;
                    let dst = (li * 2 + s1) * 2 * r + s2 * r;
                    for t1 in 0..2 {
                        for t2 in 0..2 {
                            let coef = g[row * 4 + 2 * t1 + t2];
                            if coef == C64::new(0.0, 0.0) {
                                continue;
                            }
                            let src = (li * 2 + t1) * 2 * r + t2 * r;
                            for k in 0..r {
                                out[dst + k] += coef * theta[src + k];
                            }
                        }
                    }
                }
            }
        }
        let f = svd(2 * l, 2 * r, &out).map_err(|e| match e {
            Error::NumericalFailure(msg) => {
                Error::NumericalFailure(format!("{msg} at sites ({i},{}) with bonds ({l},{r})", i + 1))
            }
            other => other,
        })?;
        let keep = keep_count(&f.s, self.chi_max, SCHMIDT_CUTOFF);
        let kept: f64 = f.s[..keep].iter().map(|x| x * x).sum();
        let discarded: f64 = f.s[keep..].iter().map(|x| x * x).sum();
        self.tensors[i] = SiteTensor::new(l, keep, f.u_cols(2 * l, keep));
        self.tensors[i + 1] = SiteTensor::new(keep, r, f.vh_rows(2 * r, keep, true));
        self.center = Some(i + 1);
        self.norm_tracked = kept;
        Ok(self.report(discarded))
    }

    /// Applies `gate` to the qubits on `site_a` and `site_b` (in that order)
    /// by swapping them adjacent, applying, and swapping back. Every SWAP is a
    /// truncated two-site update.
    pub fn apply_two_qubit_routed(&mut self, site_a: usize, site_b: usize, gate: &GateMatrix) -> Result<TruncationReport> {
        self.check_site(site_a)?;
        self.check_site(site_b)?;
        if site_a == site_b {
            return Err(invalid("routed gate needs two distinct sites"));
        }
        if gate.dim() != 4 {
            return Err(invalid("two-qubit gate must have dimension 4"));
        }
        let (lo, hi, g) = if site_a < site_b {
            (site_a, site_b, gate.clone())
        } else {
            (site_b, site_a, gate.reversed())
        };
        let swap = GateMatrix::swap();
        let mut total = TruncationReport::default();
        for k in lo..hi - 1 {
            total.absorb(self.apply_two_qubit_adjacent(k, &swap)?);
        }
        total.absorb(self.apply_two_qubit_adjacent(hi - 1, &g)?);
        for k in (lo..hi - 1).rev() {
            total.absorb(self.apply_two_qubit_adjacent(k, &swap)?);
        }
        total.max_bond_after = self.max_bond();
        Ok(total)
    }

    /// Multiplies the state by a diagonal MPO exactly; bonds multiply.
    pub fn apply_diagonal_mpo(&mut self, mpo: &DiagonalMpo) -> Result<()> {
        if mpo.n_sites() != self.n_sites() {
            return Err(invalid("MPO and MPS lengths differ"));
        }
        for (t, w) in self.tensors.iter_mut().zip(mpo.tensors()) {
            let (l, r, a, b) = (t.left, t.right, w.left, w.right);
            let (nl, nr) = (l * a, r * b);
            let mut data = vec![C64::new(0.0, 0.0); nl * 2 * nr];
            for li in 0..l {
                for ai in 0..a {
                    for s in 0..2 {
                        let dst = ((li * a + ai) * 2 + s) * nr;
                        let trow = t.row(li, s);
                        let wrow = w.row(ai, s);
                        for (bi, &wv) in wrow.iter().enumerate() {
                            if wv == C64::new(0.0, 0.0) {
                                continue;
                            }
                            for (ri, &tv) in trow.iter().enumerate() {
                                data[dst + ri * b + bi] = tv * wv;
                            }
                        }
                    }
                }
            }
            *t = SiteTensor::new(nl, nr, data);
        }
        self.center = None;
        Ok(())
    }

    /// One left-to-right QR sweep, then one right-to-left SVD sweep keeping at
    /// most `chi_max` singular values per bond.
    pub fn truncate_sweep(&mut self) -> Result<TruncationReport> {
        let n = self.n_sites();
        self.canonicalize_to(n - 1);
        let mut discarded = 0.0;
        for i in (1..n).rev() {
            let (l, r) = (self.tensors[i].left, self.tensors[i].right);
            if l <= self.chi_max {
                self.lq_left(i);
                continue;
            }
            let f = svd(l, 2 * r, &self.tensors[i].data)?;
            let keep = keep_count(&f.s, self.chi_max, SCHMIDT_CUTOFF);
            discarded += f.s[keep..].iter().map(|x| x * x).sum::<f64>();
            self.tensors[i] = SiteTensor::new(keep, r, f.vh_rows(2 * r, keep, false));
            let prev = &self.tensors[i - 1];
            let l0 = prev.left;
            let data = matmul(2 * l0, l, keep, &prev.data, &f.us(l, keep));
            self.tensors[i - 1] = SiteTensor::new(l0, keep, data);
        }
        self.center = Some(0);
        self.norm_tracked = self.tensors[0].norm_sqr();
        Ok(self.report(discarded))
    }

    /// `U_gamma = exp(-i gamma C / 2)` as one compressed diagonal MPO, followed
    /// by a single truncation sweep.
    pub fn apply_cost_layer_mpo(&mut self, g: &Graph, gamma: f64) -> Result<TruncationReport> {
        self.apply_cost_layer_mpo_capped(g, gamma, DEFAULT_MPO_BOND_CAP)
    }

    pub fn apply_cost_layer_mpo_capped(&mut self, g: &Graph, gamma: f64, bond_cap: usize) -> Result<TruncationReport> {
        self.check_graph(g)?;
        let mpo = DiagonalMpo::cost_layer(g, gamma, &self.ordering, bond_cap)?;
        self.apply_diagonal_mpo(&mpo)?;
        self.truncate_sweep()
    }

    /// `U_gamma` gate by gate, each edge routed with SWAPs and truncated.
    pub fn apply_cost_layer_routed(&mut self, g: &Graph, gamma: f64) -> Result<TruncationReport> {
        self.check_graph(g)?;
        let mut total = TruncationReport { discarded_weight: 0.0, max_bond_after: self.max_bond() };
        for e in g.edges() {
            let gate = GateMatrix::zz_phase(gamma * e.w);
            total.absorb(self.apply_two_qubit_routed(self.ordering[e.i], self.ordering[e.j], &gate)?);
        }
        Ok(total)
    }

    fn check_graph(&self, g: &Graph) -> Result<()> {
        if g.n_vertices() != self.n_sites() {
            return Err(invalid(format!(
                "graph has {} vertices, state has {} sites",
                g.n_vertices(),
                self.n_sites()
            )));
        }
        Ok(())
    }

    /// `exp(-i beta X / 2)` on every site.
    pub fn apply_mixer_layer(&mut self, beta: f64) {
        let rx = GateMatrix::rx(beta);
        for t in &mut self.tensors {
            t.apply_physical(rx.entries());
        }
    }

    /// Left environment after transferring through site `k` with `op`.
    fn transfer(&self, env: &[C64], k: usize, op: &[C64; 4]) -> Vec<C64> {
        let t = &self.tensors[k];
        let (l, r) = (t.left, t.right);
        let mut out = vec![C64::new(0.0, 0.0); r * r];
        for tt in 0..2 {
            if op[tt] == C64::new(0.0, 0.0) && op[2 + tt] == C64::new(0.0, 0.0) {
                continue;
            }
            let at = slice_matrix(t, tt);
            let x = matmul(l, l, r, env, &at);
            for s in 0..2 {
                let coef = op[s * 2 + tt];
                if coef == C64::new(0.0, 0.0) {
                    continue;
                }
                let ash = adjoint(&slice_matrix(t, s), l, r);
                let y = matmul(r, l, r, &ash, &x);
                for (o, v) in out.iter_mut().zip(y) {
                    *o += coef * v;
                }
            }
        }
        out
    }

    /// Right environment before site `k`.
    fn transfer_right(&self, env: &[C64], k: usize) -> Vec<C64> {
        let t = &self.tensors[k];
        let (l, r) = (t.left, t.right);
        let mut out = vec![C64::new(0.0, 0.0); l * l];
        for s in 0..2 {
            let a = slice_matrix(t, s);
            // conj(A_s) env A_s^T, indexed [bra l, ket l'].
            let x = matmul(l, r, r, &conj(&a), env);
            let y = matmul(l, r, l, &x, &transpose(&a, l, r));
            for (o, v) in out.iter_mut().zip(y) {
                *o += v;
            }
        }
        out
    }

    fn right_envs(&self) -> Vec<Vec<C64>> {
        let n = self.n_sites();
        let mut envs = vec![Vec::new(); n + 1];
        envs[n] = vec![C64::new(1.0, 0.0)];
        for k in (0..n).rev() {
            envs[k] = self.transfer_right(&envs[k + 1], k);
        }
        envs
    }

    /// `<psi|psi>` by full contraction.
    pub fn norm_squared(&self) -> f64 {
        let mut env = vec![C64::new(1.0, 0.0)];
        for k in 0..self.n_sites() {
            env = self.transfer(&env, k, &IDENTITY);
        }
        env[0].re
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n2 = self.norm_squared();
        if !(n2.is_finite() && n2 > 1e-300) {
            return Err(Error::InvalidState(format!("cannot normalize a state with norm^2 = {n2}")));
        }
        let site = self.center.unwrap_or(0);
        self.tensors[site].scale(C64::new(1.0 / n2.sqrt(), 0.0));
        self.norm_tracked = 1.0;
        Ok(())
    }

    /// `<s|psi>` for a bit string indexed by vertex.
    pub fn amplitude(&self, s: &BitString) -> Result<C64> {
        if s.len() != self.n_sites() {
            return Err(invalid(format!("bit string of length {} for {} sites", s.len(), self.n_sites())));
        }
        let mut v = vec![C64::new(1.0, 0.0)];
        for (k, t) in self.tensors.iter().enumerate() {
            let bit = s.bit(self.site_vertex[k]) as usize;
            let mut next = vec![C64::new(0.0, 0.0); t.right];
            for (l, &x) in v.iter().enumerate() {
                for (o, &a) in next.iter_mut().zip(t.row(l, bit)) {
                    *o += x * a;
                }
            }
            v = next;
        }
        Ok(v[0])
    }

    /// Raw `<psi| A_{site_a} B_{site_b} |psi>` for single-site operators.
    pub fn expectation_two_site(&self, site_a: usize, op_a: &[C64; 4], site_b: usize, op_b: &[C64; 4]) -> Result<C64> {
        self.check_site(site_a)?;
        self.check_site(site_b)?;
        if site_a == site_b {
            return Err(invalid("two-site expectation needs distinct sites"));
        }
        let mut env = vec![C64::new(1.0, 0.0)];
        for k in 0..self.n_sites() {
            let op = if k == site_a {
                op_a
            } else if k == site_b {
                op_b
            } else {
                &IDENTITY
            };
            env = self.transfer(&env, k, op);
        }
        Ok(env[0])
    }

    /// Raw quadratic form `<psi| Z_i Z_j |psi>` for vertices `i != j`.
    pub fn expectation_zz(&self, vertex_i: usize, vertex_j: usize) -> Result<f64> {
        if vertex_i >= self.n_sites() || vertex_j >= self.n_sites() {
            return Err(invalid("vertex out of range"));
        }
        let v = self.expectation_two_site(self.ordering[vertex_i], &PAULI_Z, self.ordering[vertex_j], &PAULI_Z)?;
        Ok(v.re)
    }

    /// For each vertex pair, every product `<O_a P_b>` with `O` from `ops_a`
    /// and `P` from `ops_b`, as `[ia * ops_b.len() + ib]`.
    pub fn pair_expectations(&self, pairs: &[(usize, usize)], ops_a: &[[C64; 4]], ops_b: &[[C64; 4]]) -> Result<Vec<Vec<C64>>> {
        let n = self.n_sites();
        let mut by_first: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        for (idx, &(va, vb)) in pairs.iter().enumerate() {
            if va >= n || vb >= n || va == vb {
                return Err(invalid(format!("invalid vertex pair ({va},{vb})")));
            }
            let (sa, sb) = (self.ordering[va], self.ordering[vb]);
            if sa < sb {
                by_first[sa].push((sb, idx));
            } else {
                by_first[sb].push((sa, idx));
            }
        }
        // Operators are attached by vertex order, not chain order.
        let swapped: Vec<bool> = pairs.iter().map(|&(va, vb)| self.ordering[va] > self.ordering[vb]).collect();
        let right = self.right_envs();
        let mut out = vec![vec![C64::new(0.0, 0.0); ops_a.len() * ops_b.len()]; pairs.len()];
        let mut left = vec![C64::new(1.0, 0.0)];
        let all_ops: Vec<[C64; 4]> = ops_a.iter().chain(ops_b).copied().collect();
        for a in 0..n {
            if !by_first[a].is_empty() {
                let mut envs: Vec<Vec<C64>> = all_ops.iter().map(|op| self.transfer(&left, a, op)).collect();
                let bmax = by_first[a].iter().map(|p| p.0).max().unwrap_or(a);
                for b in a + 1..=bmax {
                    for &(_, idx) in by_first[a].iter().filter(|p| p.0 == b) {
                        for ia in 0..ops_a.len() {
                            for ib in 0..ops_b.len() {
                                // First operator sits on the earlier site unless swapped.
                                let (env_idx, op_b) = if swapped[idx] {
                                    (ops_a.len() + ib, &ops_a[ia])
                                } else {
                                    (ia, &ops_b[ib])
                                };
                                let closed = self.transfer(&envs[env_idx], b, op_b);
                                out[idx][ia * ops_b.len() + ib] =
                                    closed.iter().zip(&right[b + 1]).map(|(x, y)| x * y).sum();
                            }
                        }
                    }
                    if b < bmax {
                        for e in envs.iter_mut() {
                            *e = self.transfer(e, b, &IDENTITY);
                        }
                    }
                }
            }
            left = self.transfer(&left, a, &IDENTITY);
        }
        Ok(out)
    }

    /// `sum_E w_ij <Z_i Z_j>`, divided by the squared norm when `normalized`.
    pub fn cost_expectation(&self, g: &Graph, normalized: bool) -> Result<f64> {
        self.check_graph(g)?;
        let pairs: Vec<(usize, usize)> = g.edges().iter().map(|e| (e.i, e.j)).collect();
        let zz = self.pair_expectations(&pairs, &[PAULI_Z], &[PAULI_Z])?;
        let raw: f64 = g.edges().iter().zip(&zz).map(|(e, v)| e.w * v[0].re).sum();
        if normalized {
            let n2 = self.norm_squared();
            if !(n2 > 1e-300) {
                return Err(Error::InvalidState("zero-norm state".into()));
            }
            return Ok(raw / n2);
        }
        Ok(raw)
    }

    /// Schmidt coefficients across the bond between sites `cut - 1` and `cut`.
    pub fn schmidt_values(&self, cut: usize) -> Result<Vec<f64>> {
        let n = self.n_sites();
        if cut == 0 || cut >= n {
            return Err(invalid(format!("cut {cut} must lie in 1..{}", n - 1)));
        }
        let mut st = self.clone();
        st.canonicalize_to(cut - 1);
        let t = &st.tensors[cut - 1];
        let f = svd(2 * t.left, t.right, &t.data)?;
        Ok(f.s)
    }

    /// Von Neumann entropy `-sum p ln p` of the squared Schmidt coefficients.
    pub fn entanglement_entropy(&self, cut: usize) -> Result<f64> {
        let n2 = self.norm_squared();
        if (n2 - 1.0).abs() > NORMALIZED_TOL {
            return Err(Error::InvalidState(format!("entropy needs a normalized state (norm^2 = {n2})")));
        }
        let s = self.schmidt_values(cut)?;
        let total: f64 = s.iter().map(|x| x * x).sum();
        Ok(s.iter()
            .map(|x| x * x / total)
            .filter(|&p| p > 0.0)
            .map(|p| -p * p.ln())
            .sum::<f64>()
            .max(0.0))
    }

    /// Dense vector indexed by vertex bits.
    pub fn to_statevector(&self) -> Result<StateVector> {
        let n = self.n_sites();
        if n > DEFAULT_SV_CAP {
            return Err(Error::ResourceLimit(format!(
                "dense contraction of {n} sites exceeds the cap of {DEFAULT_SV_CAP}"
            )));
        }
        // Rows: configurations of the sites seen so far, site k at bit k.
        let mut p = vec![C64::new(1.0, 0.0)];
        let mut rows = 1usize;
        for t in &self.tensors {
            let (l, r) = (t.left, t.right);
            let mut next = Vec::with_capacity(2 * rows * r);
            for s in 0..2 {
                next.extend(matmul(rows, l, r, &p, &slice_matrix(t, s)));
            }
            p = next;
            rows *= 2;
        }
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
        for (idx, a) in p.into_iter().enumerate() {
            let mut v_idx = 0usize;
            for k in 0..n {
                v_idx |= ((idx >> k) & 1) << self.site_vertex[k];
            }
            amps[v_idx] = a;
        }
        StateVector::from_amplitudes(amps)
    }
}

/// `A[:, s, :]` as a contiguous `(left x right)` matrix.
fn slice_matrix(t: &SiteTensor, s: usize) -> Vec<C64> {
    let mut out = Vec::with_capacity(t.left * t.right);
    for l in 0..t.left {
        out.extend_from_slice(t.row(l, s));
    }
    out
}

fn adjoint(a: &[C64], rows: usize, cols: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            out[j * rows + i] = a[i * cols + j].conj();
        }
    }
    out
}

fn transpose(a: &[C64], rows: usize, cols: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            out[j * rows + i] = a[i * cols + j];
        }
    }
    out
}

fn conj(a: &[C64]) -> Vec<C64> {
    a.iter().map(|x| x.conj()).collect()
}

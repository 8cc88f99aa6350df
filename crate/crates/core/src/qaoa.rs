//! QAOA circuits on the MPS engine.
//!
//! `|beta, gamma> = prod_l U_{beta_l} U_{gamma_l} H^{(x)N} |0>` with
//! `U_gamma = exp(-i gamma C / 2)` and `U_beta = prod_j exp(-i beta X_j / 2)`.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graph::{BitString, Graph};
use crate::mps::state::{PAULI_Y, PAULI_Z};
use crate::mps::{MpsState, TruncationReport};
use crate::oracle::StateVector;
use crate::seed::{derive_seed, rng_from_seed, tag_hash};
use crate::C64;

/// Largest `N` for which expectation values go through a dense contraction;
/// beyond it they use transfer matrices on the chain.
pub const DENSE_EVAL_MAX: usize = 20;

/// Widest bond for which depth-one profiles use transfer matrices even when a
/// dense contraction is allowed.
const TRANSFER_BOND_MAX: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaoaAngles {
    gammas: Vec<f64>,
    betas: Vec<f64>,
}

impl QaoaAngles {
    pub fn new(gammas: Vec<f64>, betas: Vec<f64>) -> Result<Self> {
        if gammas.is_empty() || gammas.len() != betas.len() {
            return Err(invalid(format!(
                "need equal, non-zero numbers of angles (got {} gammas, {} betas)",
                gammas.len(),
                betas.len()
            )));
        }
        if gammas.iter().chain(&betas).any(|x| !x.is_finite()) {
            return Err(invalid("angles must be finite"));
        }
        Ok(QaoaAngles { gammas, betas })
    }

    /// Splits `[gamma_1..gamma_p, beta_1..beta_p]`.
    pub fn from_flat(x: &[f64]) -> Result<Self> {
        if x.len() % 2 == 1 {
            return Err(invalid("flat angle vector must have even length"));
        }
        let p = x.len() / 2;
        Self::new(x[..p].to_vec(), x[p..].to_vec())
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.gammas.iter().chain(&self.betas).copied().collect()
    }

    pub fn p(&self) -> usize {
        self.gammas.len()
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    /// Whole cost layer as one MPO, truncated once per layer.
    #[serde(rename = "mpo-per-layer")]
    MpoPerLayer,
    /// Edge gates routed with SWAPs, truncated after every two-site update.
    #[serde(rename = "routed-per-gate")]
    RoutedPerGate,
}

impl Method {
    pub fn tag(self) -> &'static str {
        match self {
            Method::MpoPerLayer => "mpo-per-layer",
            Method::RoutedPerGate => "routed-per-gate",
        }
    }

    /// Truncation cadence recorded in outputs.
    pub fn cadence(self) -> &'static str {
        match self {
            Method::MpoPerLayer => "per-layer",
            Method::RoutedPerGate => "per-gate",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mpo-per-layer" | "mpo" => Ok(Method::MpoPerLayer),
            "routed-per-gate" | "routed" => Ok(Method::RoutedPerGate),
            other => Err(invalid(format!("unknown method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NormalizeMode {
    /// The optimizer sees the raw quadratic form of the truncated state.
    #[serde(rename = "final-only")]
    FinalOnly,
    /// The state is renormalized after every layer.
    #[serde(rename = "always")]
    Always,
}

impl NormalizeMode {
    pub fn tag(self) -> &'static str {
        match self {
            NormalizeMode::FinalOnly => "final-only",
            NormalizeMode::Always => "always",
        }
    }
}

impl fmt::Display for NormalizeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for NormalizeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "final-only" => Ok(NormalizeMode::FinalOnly),
            "always" => Ok(NormalizeMode::Always),
            other => Err(invalid(format!("unknown normalize mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CircuitConfig {
    pub chi_max: usize,
    pub method: Method,
    pub ordering_seed: u64,
    pub normalize_mode: NormalizeMode,
}

impl CircuitConfig {
    pub fn new(chi_max: usize) -> Self {
        CircuitConfig {
            chi_max,
            method: Method::MpoPerLayer,
            ordering_seed: 0,
            normalize_mode: NormalizeMode::FinalOnly,
        }
    }

    pub fn with_chi(mut self, chi_max: usize) -> Self {
        self.chi_max = chi_max;
        self
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn with_ordering_seed(mut self, seed: u64) -> Self {
        self.ordering_seed = seed;
        self
    }

    pub fn with_normalize_mode(mut self, mode: NormalizeMode) -> Self {
        self.normalize_mode = mode;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.chi_max == 0 {
            return Err(invalid("chi_max must be at least 1"));
        }
        Ok(())
    }
}

/// Random vertex-to-site assignment drawn from `seed`; `ordering[v]` is the
/// chain site of vertex `v`.
pub fn ordering_for(n: usize, seed: u64) -> Vec<usize> {
    let mut rng = rng_from_seed(derive_seed(seed, &[tag_hash("ordering"), n as u64]));
    let mut sites: Vec<usize> = (0..n).collect();
    sites.shuffle(&mut rng);
    sites
}

/// Whether the first cost layer is built from its dense output rather than by
/// applying the MPO.
pub fn uses_dense_first_layer(n: usize, method: Method) -> bool {
    method == Method::MpoPerLayer && n <= DENSE_EVAL_MAX
}

/// Exact state after one cost layer on the plus state,
/// `exp(-i gamma C / 2) / 2^(N/2)`, vertex-indexed.
pub fn layer_amplitudes(g: &Graph, gamma: f64) -> Result<Vec<C64>> {
    let n = g.n_vertices();
    if n > DENSE_EVAL_MAX {
        return Err(Error::ResourceLimit(format!("dense layer construction is limited to N <= {DENSE_EVAL_MAX}")));
    }
    let scale = 0.5f64.powf(n as f64 / 2.0);
    Ok(g.cost_table().iter().map(|&c| C64::from_polar(scale, -0.5 * gamma * c)).collect())
}

/// Plus state followed by one cost layer with `gamma`, truncated per `cfg`.
///
/// For the per-layer method on small graphs the chain is split directly from
/// [`layer_amplitudes`], which gives the same state as applying the MPO and
/// sweeping.
pub fn cost_layer_state(g: &Graph, gamma: f64, cfg: &CircuitConfig) -> Result<(MpsState, TruncationReport)> {
    cfg.validate()?;
    let n = g.n_vertices();
    let ordering = ordering_for(n, cfg.ordering_seed);
    if uses_dense_first_layer(n, cfg.method) {
        return MpsState::from_dense(&layer_amplitudes(g, gamma)?, ordering, cfg.chi_max);
    }
    let mut st = MpsState::plus_state(n, ordering, cfg.chi_max)?;
    let rep = apply_cost_layer(&mut st, g, gamma, cfg.method)?;
    Ok((st, rep))
}

fn apply_cost_layer(st: &mut MpsState, g: &Graph, gamma: f64, method: Method) -> Result<TruncationReport> {
    match method {
        Method::MpoPerLayer => st.apply_cost_layer_mpo(g, gamma),
        Method::RoutedPerGate => st.apply_cost_layer_routed(g, gamma),
    }
}

/// Runs the full circuit; the aggregate report sums discarded weight over layers.
pub fn run_circuit_with_report(g: &Graph, angles: &QaoaAngles, cfg: &CircuitConfig) -> Result<(MpsState, TruncationReport)> {
    let (mut st, mut total) = cost_layer_state(g, angles.gammas()[0], cfg)?;
    for (layer, (&gamma, &beta)) in angles.gammas().iter().zip(angles.betas()).enumerate() {
        if layer > 0 {
            total.absorb(apply_cost_layer(&mut st, g, gamma, cfg.method)?);
        }
        st.apply_mixer_layer(beta);
        if cfg.normalize_mode == NormalizeMode::Always {
            st.normalize()?;
        }
    }
    Ok((st, total))
}

pub fn run_circuit(g: &Graph, angles: &QaoaAngles, cfg: &CircuitConfig) -> Result<MpsState> {
    run_circuit_with_report(g, angles, cfg).map(|(st, _)| st)
}

/// `sum_E w <Z_i Z_j>` on a state, dense for small `N`, transfer matrices otherwise.
pub fn state_cost(st: &MpsState, g: &Graph, normalized: bool) -> Result<f64> {
    if g.n_vertices() <= DENSE_EVAL_MAX {
        let sv = st.to_statevector()?;
        let raw = crate::oracle::sv_cost_expectation(&sv, g)?;
        if normalized {
            let n2 = sv.norm_squared();
            if !(n2 > 1e-300) {
                return Err(Error::InvalidState("zero-norm state".into()));
            }
            return Ok(raw / n2);
        }
        Ok(raw)
    } else {
        st.cost_expectation(g, normalized)
    }
}

/// The function handed to the optimizer.
pub fn objective_cost(g: &Graph, angles: &QaoaAngles, cfg: &CircuitConfig) -> Result<f64> {
    let st = run_circuit(g, angles, cfg)?;
    state_cost(&st, g, cfg.normalize_mode == NormalizeMode::Always)
}

#[derive(Debug, Clone)]
pub struct FinalEvaluation {
    /// Normalized cost expectation.
    pub cost: f64,
    pub state: MpsState,
    /// Squared norm of the truncated state before the final normalization.
    pub norm_before: f64,
    pub report: TruncationReport,
}

pub fn final_cost_and_state(g: &Graph, angles: &QaoaAngles, cfg: &CircuitConfig) -> Result<FinalEvaluation> {
    let (mut st, report) = run_circuit_with_report(g, angles, cfg)?;
    let norm_before = st.norm_squared();
    st.normalize()?;
    let cost = state_cost(&st, g, false)?;
    Ok(FinalEvaluation { cost, state: st, norm_before, report })
}

/// Total probability of `minimizers` in a normalized state.
pub fn pmin_of_state(st: &MpsState, minimizers: &[BitString]) -> Result<f64> {
    let n2 = st.norm_squared();
    if (n2 - 1.0).abs() > crate::mps::state::NORMALIZED_TOL {
        return Err(Error::InvalidState(format!("p_min needs a normalized state (norm^2 = {n2})")));
    }
    let mut total = 0.0;
    for s in minimizers {
        total += st.amplitude(s)?.norm_sqr();
    }
    Ok(total.clamp(0.0, 1.0))
}

pub fn pmin(g: &Graph, angles: &QaoaAngles, cfg: &CircuitConfig, minimizers: &[BitString]) -> Result<f64> {
    let fin = final_cost_and_state(g, angles, cfg)?;
    pmin_of_state(&fin.state, minimizers)
}

/// Second moments of the state after one cost layer, enough to evaluate the
/// p = 1 cost at every mixer angle.
///
/// With `U_beta^dag Z U_beta = Z cos(beta) + Y sin(beta)` on every qubit, the raw
/// cost after the mixer is `zz cos^2 + mixed sin cos + yy sin^2`, where
/// `zz = sum w <ZZ>`, `mixed = sum w <ZY + YZ>` and `yy = sum w <YY>`. The
/// squared norm does not depend on `beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleLayerProfile {
    pub zz: f64,
    pub mixed: f64,
    pub yy: f64,
    pub norm: f64,
}

impl SingleLayerProfile {
    /// Dense contraction for small graphs with wide bonds, transfer matrices otherwise.
    pub fn from_state(st: &MpsState, g: &Graph) -> Result<Self> {
        if g.n_vertices() <= DENSE_EVAL_MAX && st.max_bond() > TRANSFER_BOND_MAX {
            Ok(Self::from_statevector(&st.to_statevector()?, g))
        } else {
            Self::from_transfer(st, g)
        }
    }

    pub fn from_statevector(sv: &StateVector, g: &Graph) -> Self {
        let amps = sv.amplitudes();
        let (mut zz, mut mixed, mut yy) = (0.0, 0.0, 0.0);
        for e in g.edges() {
            let (bi, bj) = (1usize << e.i, 1usize << e.j);
            let (mut a, mut b, mut d) = (0.0, C64::new(0.0, 0.0), C64::new(0.0, 0.0));
            for (k, &x) in amps.iter().enumerate() {
                let zizj = if (k & bi == 0) == (k & bj == 0) { 1.0 } else { -1.0 };
                a += zizj * x.norm_sqr();
                // Y|s> = i z|s'>: Z_i Y_j and Y_i Z_j pick up i z_i z_j,
                // Y_i Y_j picks up -z_i z_j.
                let w = x * zizj;
                b += (amps[k ^ bj].conj() + amps[k ^ bi].conj()) * w * C64::new(0.0, 1.0);
                d -= amps[k ^ bi ^ bj].conj() * w;
            }
            zz += e.w * a;
            mixed += e.w * b.re;
            yy += e.w * d.re;
        }
        SingleLayerProfile { zz, mixed, yy, norm: sv.norm_squared() }
    }

    pub fn from_transfer(st: &MpsState, g: &Graph) -> Result<Self> {
        let pairs: Vec<(usize, usize)> = g.edges().iter().map(|e| (e.i, e.j)).collect();
        let ops = [PAULI_Z, PAULI_Y];
        let vals = st.pair_expectations(&pairs, &ops, &ops)?;
        let (mut zz, mut mixed, mut yy) = (0.0, 0.0, 0.0);
        for (e, v) in g.edges().iter().zip(&vals) {
            zz += e.w * v[0].re;
            mixed += e.w * (v[1].re + v[2].re);
            yy += e.w * v[3].re;
        }
        Ok(SingleLayerProfile { zz, mixed, yy, norm: st.norm_squared() })
    }

    /// Unnormalized cost after a mixer layer with `beta`.
    pub fn raw_cost(&self, beta: f64) -> f64 {
        let (s, c) = (2.0 * beta).sin_cos();
        0.5 * (self.zz + self.yy) + 0.5 * (self.zz - self.yy) * c + 0.5 * self.mixed * s
    }

    pub fn normalized_cost(&self, beta: f64) -> f64 {
        self.raw_cost(beta) / self.norm
    }

    /// Minimizing `beta` in `[0, pi)` and the minimal raw cost.
    pub fn best_beta(&self) -> (f64, f64) {
        let amp = 0.5 * (self.zz - self.yy).hypot(self.mixed);
        let phi = self.mixed.atan2(self.zz - self.yy);
        let beta = (0.5 * (phi + std::f64::consts::PI)).rem_euclid(std::f64::consts::PI);
        (beta, 0.5 * (self.zz + self.yy) - amp)
    }
}

pub fn single_layer_profile(g: &Graph, gamma: f64, cfg: &CircuitConfig) -> Result<SingleLayerProfile> {
    let (st, _) = cost_layer_state(g, gamma, cfg)?;
    SingleLayerProfile::from_state(&st, g)
}

/// Final normalized cost on a `gamma x beta` grid at depth one,
/// `M[a][b]` at `(gamma_grid[a], beta_grid[b])`.
pub fn landscape_scan(g: &Graph, gamma_grid: &[f64], beta_grid: &[f64], cfg: &CircuitConfig) -> Result<Vec<Vec<f64>>> {
    if gamma_grid.is_empty() || beta_grid.is_empty() {
        return Err(invalid("landscape grids must be non-empty"));
    }
    gamma_grid
        .par_iter()
        .map(|&gamma| {
            let prof = single_layer_profile(g, gamma, cfg)?;
            if !(prof.norm > 1e-300) {
                return Err(Error::InvalidState("zero-norm state in landscape scan".into()));
            }
            Ok(beta_grid.iter().map(|&b| prof.normalized_cost(b)).collect())
        })
        .collect()
}

/// `n` points `start + k (stop - start) / n`, `k = 0..n`.
pub fn uniform_grid(start: f64, stop: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| start + (stop - start) * k as f64 / n as f64).collect()
}

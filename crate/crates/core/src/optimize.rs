//! Angle optimization: BFGS with finite-difference gradients, random
//! multistart, and an exact search for depth-one circuits.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graph::Graph;
use crate::qaoa::{
    final_cost_and_state, layer_amplitudes, ordering_for, objective_cost, single_layer_profile, CircuitConfig, FinalEvaluation, NormalizeMode,
    QaoaAngles, SingleLayerProfile, uses_dense_first_layer,
};
use crate::mps::{exact_chi, MpsState};
use crate::oracle::StateVector;
use crate::seed::{derive_seed, rng_from_seed};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerOptions {
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    /// Central-difference step, scaled by `1 + |x_i|`.
    pub fd_step: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        OptimizerOptions { max_iterations: 200, gradient_tolerance: 1e-8, fd_step: 1e-6, restarts: 100, seed: 0 }
    }
}

impl OptimizerOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 || self.restarts == 0 {
            return Err(invalid("max_iterations and restarts must be positive"));
        }
        if !(self.gradient_tolerance > 0.0 && self.fd_step > 0.0) {
            return Err(invalid("gradient_tolerance and fd_step must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BfgsResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
}

const ARMIJO_C: f64 = 1e-4;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn eval<F>(f: &mut F, x: &[f64], last_good: &[f64]) -> Result<f64>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let v = f(x)?;
    if !v.is_finite() {
        return Err(Error::NonFiniteObjective { last_good: last_good.to_vec() });
    }
    Ok(v)
}

fn fd_gradient<F>(f: &mut F, x: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let mut g = vec![0.0; x.len()];
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        let step = h * (1.0 + x[i].abs());
        xp[i] = x[i] + step;
        let fp = eval(f, &xp, x)?;
        xp[i] = x[i] - step;
        let fm = eval(f, &xp, x)?;
        xp[i] = x[i];
        g[i] = (fp - fm) / (2.0 * step);
    }
    Ok(g)
}

/// Quasi-Newton minimization with central finite-difference gradients and a
/// backtracking Armijo line search.
pub fn bfgs_minimize<F>(mut f: F, x0: &[f64], opts: &OptimizerOptions) -> Result<BfgsResult>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let k = x0.len();
    if k == 0 {
        return Err(invalid("cannot minimize over zero variables"));
    }
    let mut x = x0.to_vec();
    let mut fx = eval(&mut f, &x, &x)?;
    let mut g = fd_gradient(&mut f, &x, opts.fd_step)?;
    // Inverse Hessian approximation, row-major.
    let mut h = identity(k);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iterations {
        if dot(&g, &g).sqrt() < opts.gradient_tolerance {
            converged = true;
            break;
        }
        let mut d = mat_vec(&h, &g, k).into_iter().map(|v| -v).collect::<Vec<_>>();
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            h = identity(k);
            d = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
        }
        let mut t = 1.0;
        let mut accepted = None;
        while t > 1e-16 {
            let xn: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + t * b).collect();
            let fnew = eval(&mut f, &xn, &x)?;
            if fnew <= fx + ARMIJO_C * t * slope {
                accepted = Some((xn, fnew));
                break;
            }
            t *= 0.5;
        }
        iterations += 1;
        let Some((xn, fnew)) = accepted else {
            break;
        };
        let gn = fd_gradient(&mut f, &xn, opts.fd_step)?;
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let ys = dot(&y, &s);
        if ys > 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() {
            if iterations == 1 {
                let scale = ys / dot(&y, &y);
                h = identity(k).into_iter().map(|v| v * scale).collect();
            }
            bfgs_update(&mut h, &s, &y, ys, k);
        }
        x = xn;
        fx = fnew;
        g = gn;
    }
    if !converged && dot(&g, &g).sqrt() < opts.gradient_tolerance {
        converged = true;
    }
    Ok(BfgsResult { x, f: fx, iterations, converged })
}

fn identity(k: usize) -> Vec<f64> {
    let mut m = vec![0.0; k * k];
    for i in 0..k {
        m[i * k + i] = 1.0;
    }
    m
}

fn mat_vec(m: &[f64], v: &[f64], k: usize) -> Vec<f64> {
    (0..k).map(|i| dot(&m[i * k..(i + 1) * k], v)).collect()
}

/// `H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T`.
fn bfgs_update(h: &mut [f64], s: &[f64], y: &[f64], ys: f64, k: usize) {
    let rho = 1.0 / ys;
    let hy = mat_vec(h, y, k);
    let yhy = dot(y, &hy);
    for i in 0..k {
        for j in 0..k {
            h[i * k + j] += -rho * (s[i] * hy[j] + hy[i] * s[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
}

/// Brent's parabolic-interpolation minimizer on `[a, b]`.
pub fn brent_minimize<F>(mut f: F, a: f64, b: f64, tol: f64, max_iter: usize) -> Result<(f64, f64, usize)>
where
    F: FnMut(f64) -> Result<f64>,
{
    const GOLD: f64 = 0.381_966_011_250_105_1;
    let (mut a, mut b) = (a.min(b), a.max(b));
    let mut x = a + GOLD * (b - a);
    let (mut w, mut v) = (x, x);
    let mut fx = f(x)?;
    let (mut fw, mut fv) = (fx, fx);
    let (mut d, mut e) = (0.0f64, 0.0f64);
    let mut evals = 1;
    for _ in 0..max_iter {
        let m = 0.5 * (a + b);
        let tol1 = tol * x.abs() + 1e-12;
        let tol2 = 2.0 * tol1;
        if (x - m).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        let mut golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let e_old = e;
            e = d;
            if p.abs() < (0.5 * q * e_old).abs() && p > q * (a - x) && p < q * (b - x) {
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if x < m { tol1 } else { -tol1 };
                }
                golden = false;
            }
        }
        if golden {
            e = if x < m { b - x } else { a - x };
            d = GOLD * e;
        }
        let u = if d.abs() >= tol1 { x + d } else { x + tol1.copysign(d) };
        let fu = f(u)?;
        evals += 1;
        if !fu.is_finite() {
            return Err(Error::NonFiniteObjective { last_good: vec![x] });
        }
        if fu <= fx {
            if u < x {
                b = x;
            } else {
                a = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    Ok((x, fx, evals))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OptimizerKind {
    #[serde(rename = "multistart")]
    Multistart,
    #[serde(rename = "single-layer")]
    SingleLayer,
}

impl OptimizerKind {
    pub fn tag(self) -> &'static str {
        match self {
            OptimizerKind::Multistart => "multistart",
            OptimizerKind::SingleLayer => "single-layer",
        }
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "multistart" => Ok(OptimizerKind::Multistart),
            "single-layer" => Ok(OptimizerKind::SingleLayer),
            other => Err(invalid(format!("unknown optimizer '{other}'"))),
        }
    }
}

/// One optimized instance. Optional fields are filled by sweeps that ask for
/// them; `error` marks a failed cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub graph_id: String,
    pub n: usize,
    pub p: usize,
    pub chi: usize,
    pub method: String,
    pub ordering_seed: u64,
    /// `null` (read back as NaN) in failed records.
    #[serde(deserialize_with = "null_as_nan")]
    pub best_cost: f64,
    pub gammas: Vec<f64>,
    pub betas: Vec<f64>,
    /// Squared norm of the truncated state before the final normalization.
    #[serde(deserialize_with = "null_as_nan")]
    pub norm: f64,
    pub restarts: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_edges: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi_effective: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalize_mode: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cadence: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_objective: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pmin: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entropy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn null_as_nan<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

impl RunRecord {
    /// Record of a cell that failed with `error`; numeric fields are NaN and
    /// the angle vectors empty.
    pub fn failed(graph_id: &str, g: &Graph, p: usize, cfg: &CircuitConfig, seed: u64, error: impl Into<String>) -> Self {
        RunRecord {
            graph_id: graph_id.to_string(),
            n: g.n_vertices(),
            p,
            chi: cfg.chi_max,
            method: cfg.method.tag().to_string(),
            ordering_seed: cfg.ordering_seed,
            best_cost: f64::NAN,
            gammas: Vec::new(),
            betas: Vec::new(),
            norm: f64::NAN,
            restarts: 0,
            seed,
            family: Some(g.family().tag().to_string()),
            n_edges: Some(g.n_edges()),
            chi_effective: None,
            normalize_mode: Some(cfg.normalize_mode.tag().to_string()),
            cadence: Some(cfg.method.cadence().to_string()),
            optimizer: None,
            best_objective: None,
            pmin: None,
            entropy: None,
            c_min: None,
            exact: None,
            error: Some(error.into()),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("run records always serialize")
    }

    pub fn angles(&self) -> Result<QaoaAngles> {
        QaoaAngles::new(self.gammas.clone(), self.betas.clone())
    }
}

/// Parses a run file, skipping blank and `{"meta": ...}` lines. Failed
/// records are kept; only successful ones must carry `p` angles per vector.
pub fn parse_run_jsonl(text: &str) -> Result<Vec<RunRecord>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || crate::is_meta_line(line) {
            continue;
        }
        let rec: RunRecord =
            serde_json::from_str(line).map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
        if rec.is_ok() && (rec.gammas.len() != rec.betas.len() || rec.gammas.len() != rec.p) {
            return Err(Error::Parse(format!("line {}: angle vectors do not match p", lineno + 1)));
        }
        out.push(rec);
    }
    Ok(out)
}

/// Outcome of an angle search before it is packaged into a [`RunRecord`].
#[derive(Debug, Clone)]
pub struct OptimizedRun {
    pub angles: QaoaAngles,
    /// Value of the optimized objective (unnormalized under `FinalOnly`).
    pub objective: f64,
    pub final_eval: FinalEvaluation,
    pub restarts: usize,
    pub optimizer: OptimizerKind,
}

impl OptimizedRun {
    pub fn record(&self, graph_id: &str, g: &Graph, cfg: &CircuitConfig, seed: u64) -> RunRecord {
        RunRecord {
            graph_id: graph_id.to_string(),
            n: g.n_vertices(),
            p: self.angles.p(),
            chi: cfg.chi_max,
            method: cfg.method.tag().to_string(),
            ordering_seed: cfg.ordering_seed,
            best_cost: self.final_eval.cost,
            gammas: self.angles.gammas().to_vec(),
            betas: self.angles.betas().to_vec(),
            norm: self.final_eval.norm_before,
            restarts: self.restarts,
            seed,
            family: Some(g.family().tag().to_string()),
            n_edges: Some(g.n_edges()),
            chi_effective: Some(self.final_eval.state.chi_max()),
            normalize_mode: Some(cfg.normalize_mode.tag().to_string()),
            cadence: Some(cfg.method.cadence().to_string()),
            optimizer: Some(self.optimizer.tag().to_string()),
            best_objective: Some(self.objective),
            pmin: None,
            entropy: None,
            c_min: None,
            exact: Some(self.final_eval.state.chi_max() >= exact_chi(g.n_vertices())),
            error: None,
        }
    }
}

/// Initial angles of restart `r`: `gamma ~ U[0, 2 pi)`, `beta ~ U[0, pi)`.
pub fn restart_point(seed: u64, r: usize, p: usize) -> Vec<f64> {
    let mut rng = rng_from_seed(derive_seed(seed, &[r as u64]));
    let gammas: Vec<f64> = (0..p).map(|_| rng.random::<f64>() * 2.0 * PI).collect();
    let betas: Vec<f64> = (0..p).map(|_| rng.random::<f64>() * PI).collect();
    gammas.into_iter().chain(betas).collect()
}

/// Per-restart BFGS results, in restart order; failed restarts are `None`.
pub fn multistart_restarts(g: &Graph, p: usize, cfg: &CircuitConfig, opts: &OptimizerOptions) -> Result<Vec<Option<BfgsResult>>> {
    opts.validate()?;
    if p == 0 {
        return Err(invalid("depth p must be at least 1"));
    }
    Ok((0..opts.restarts)
        .into_par_iter()
        .map(|r| {
            let x0 = restart_point(opts.seed, r, p);
            let objective = |x: &[f64]| objective_cost(g, &QaoaAngles::from_flat(x)?, cfg);
            bfgs_minimize(objective, &x0, opts).ok()
        })
        .collect())
}

/// Best of `opts.restarts` BFGS runs from random starts (ties go to the lowest
/// restart index), re-evaluated on the normalized final state.
pub fn multistart_optimize(g: &Graph, p: usize, cfg: &CircuitConfig, opts: &OptimizerOptions) -> Result<OptimizedRun> {
    let results = multistart_restarts(g, p, cfg, opts)?;
    let best = results
        .iter()
        .flatten()
        .fold(None::<&BfgsResult>, |acc, r| match acc {
            Some(b) if b.f <= r.f => Some(b),
            _ => Some(r),
        })
        .ok_or_else(|| Error::OptimizationFailure(format!("all {} restarts failed numerically", opts.restarts)))?;
    let angles = QaoaAngles::from_flat(&best.x)?;
    let final_eval = final_cost_and_state(g, &angles, cfg)?;
    Ok(OptimizedRun { angles, objective: best.f, final_eval, restarts: opts.restarts, optimizer: OptimizerKind::Multistart })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingleLayerOptions {
    /// Grid points over the gamma period.
    pub grid_points: usize,
    /// Number of best grid minima refined with Brent's method.
    pub refine: usize,
    pub tol: f64,
}

impl Default for SingleLayerOptions {
    fn default() -> Self {
        SingleLayerOptions { grid_points: 24, refine: 2, tol: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleLayerOptimum {
    pub gamma: f64,
    pub beta: f64,
    /// Minimal objective: raw cost, or normalized when `normalized` was set.
    pub objective: f64,
    pub profile: SingleLayerProfile,
    pub evaluations: usize,
}

/// Range of gamma that covers the depth-one landscape once the conjugation
/// symmetry `(gamma, beta) -> (-gamma, -beta)` is used: `[0, pi]` for unit
/// weights (period `2 pi`), `[0, 2 pi]` otherwise. With unit weights and every
/// degree odd, `exp(-i pi C / 2)` is a global phase times the product of all
/// `Z`, which maps `beta` to `-beta`, so `[0, pi / 2]` suffices. Truncation
/// commutes with both maps.
pub fn gamma_search_range(g: &Graph) -> f64 {
    if g.has_unit_weights() && (0..g.n_vertices()).all(|v| g.degree(v) % 2 == 1) {
        PI / 2.0
    } else if g.has_unit_weights() {
        PI
    } else {
        2.0 * PI
    }
}

fn layer_value(p: &SingleLayerProfile, normalized: bool) -> f64 {
    let raw = p.best_beta().1;
    if normalized {
        raw / p.norm
    } else {
        raw
    }
}

/// Grid of `gamma` values searched by the depth-one optimizer.
pub fn single_layer_grid(gamma_max: f64, opts: &SingleLayerOptions) -> Result<Vec<f64>> {
    if opts.grid_points < 3 || opts.refine == 0 {
        return Err(invalid("single-layer search needs at least 3 grid points and 1 refinement"));
    }
    let h = gamma_max / (opts.grid_points - 1) as f64;
    Ok((0..opts.grid_points).map(|i| i as f64 * h).collect())
}

/// Refines the best local minima of precomputed grid values with Brent's method.
fn refine_from_grid<F>(grid: &[f64], values: &[f64], mut profile_at: F, normalized: bool, opts: &SingleLayerOptions) -> Result<SingleLayerOptimum>
where
    F: FnMut(f64) -> Result<SingleLayerProfile>,
{
    let k = grid.len();
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteObjective { last_good: vec![grid[i]] });
    }
    // Local minima of the grid, best first; ties resolved by index.
    let mut cands: Vec<usize> = (0..k)
        .filter(|&i| (i == 0 || values[i] <= values[i - 1]) && (i == k - 1 || values[i] <= values[i + 1]))
        .collect();
    cands.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    cands.truncate(opts.refine);
    let mut evaluations = k;
    let mut best: Option<(f64, f64)> = None;
    for &i in &cands {
        let lo = grid[i.saturating_sub(1)];
        let hi = grid[(i + 1).min(k - 1)];
        let (x, fx, ev) = brent_minimize(|gm| Ok(layer_value(&profile_at(gm)?, normalized)), lo, hi, opts.tol, 100)?;
        evaluations += ev;
        let (x, fx) = if values[i] < fx { (grid[i], values[i]) } else { (x, fx) };
        if best.is_none_or(|(_, bf)| fx < bf) {
            best = Some((x, fx));
        }
    }
    let (gamma, objective) = best.expect("at least one grid candidate");
    let profile = profile_at(gamma)?;
    let (beta, _) = profile.best_beta();
    Ok(SingleLayerOptimum { gamma, beta, objective, profile, evaluations: evaluations + 1 })
}

/// Exact depth-one search: for every gamma the optimal beta is closed-form,
/// leaving a one-dimensional search over gamma (grid, then Brent refinement).
pub fn single_layer_search<F>(mut profile_at: F, gamma_max: f64, normalized: bool, opts: &SingleLayerOptions) -> Result<SingleLayerOptimum>
where
    F: FnMut(f64) -> Result<SingleLayerProfile>,
{
    let grid = single_layer_grid(gamma_max, opts)?;
    let values = grid.iter().map(|&gm| Ok(layer_value(&profile_at(gm)?, normalized))).collect::<Result<Vec<_>>>()?;
    refine_from_grid(&grid, &values, profile_at, normalized, opts)
}

/// [`single_layer_optimize`] for several bond dimensions at once. The untruncated
/// chain after the cost layer does not depend on `chi`, so the grid phase
/// builds it once per `gamma` and truncates a copy per bond dimension.
pub fn single_layer_sweep(g: &Graph, chis: &[usize], cfg: &CircuitConfig, opts: &SingleLayerOptions) -> Result<Vec<OptimizedRun>> {
    if chis.is_empty() {
        return Ok(Vec::new());
    }
    if !uses_dense_first_layer(g.n_vertices(), cfg.method) {
        return chis.iter().map(|&chi| single_layer_optimize(g, &cfg.with_chi(chi), opts)).collect();
    }
    let normalized = cfg.normalize_mode == NormalizeMode::Always;
    let grid = single_layer_grid(gamma_search_range(g), opts)?;
    let mut values = vec![Vec::with_capacity(grid.len()); chis.len()];
    let n = g.n_vertices();
    let ordering = ordering_for(n, cfg.ordering_seed);
    for &gm in &grid {
        let amps = layer_amplitudes(g, gm)?;
        for (c, &chi) in chis.iter().enumerate() {
            let profile = if chi >= exact_chi(n) {
                SingleLayerProfile::from_statevector(&StateVector::from_amplitudes(amps.clone())?, g)
            } else {
                let (st, _) = MpsState::from_dense(&amps, ordering.clone(), chi)?;
                SingleLayerProfile::from_state(&st, g)?
            };
            values[c].push(layer_value(&profile, normalized));
        }
    }
    chis.iter()
        .zip(&values)
        .map(|(&chi, vals)| {
            let cfg = cfg.with_chi(chi);
            let opt = refine_from_grid(&grid, vals, |gm| single_layer_profile(g, gm, &cfg), normalized, opts)?;
            finish_single_layer(g, &cfg, opt, opts)
        })
        .collect()
}

fn finish_single_layer(g: &Graph, cfg: &CircuitConfig, opt: SingleLayerOptimum, opts: &SingleLayerOptions) -> Result<OptimizedRun> {
    let angles = QaoaAngles::new(vec![opt.gamma], vec![opt.beta])?;
    let final_eval = final_cost_and_state(g, &angles, cfg)?;
    Ok(OptimizedRun { angles, objective: opt.objective, final_eval, restarts: opts.refine, optimizer: OptimizerKind::SingleLayer })
}

/// Depth-one optimization of the circuit objective through [`single_layer_search`].
pub fn single_layer_optimize(g: &Graph, cfg: &CircuitConfig, opts: &SingleLayerOptions) -> Result<OptimizedRun> {
    let normalized = cfg.normalize_mode == NormalizeMode::Always;
    let opt = single_layer_search(|gm| single_layer_profile(g, gm, cfg), gamma_search_range(g), normalized, opts)?;
    finish_single_layer(g, cfg, opt, opts)
}

/// Depth-one optimum of the exact (untruncated) circuit, from dense vectors.
pub fn exact_single_layer_optimum(g: &Graph, opts: &SingleLayerOptions) -> Result<SingleLayerOptimum> {
    let costs = g.cost_table();
    let plus = crate::oracle::StateVector::plus(g.n_vertices())?;
    single_layer_search(
        |gm| {
            let mut sv = plus.clone();
            sv.apply_cost_phases(&costs, gm);
            Ok(SingleLayerProfile::from_statevector(&sv, g))
        },
        gamma_search_range(g),
        false,
        opts,
    )
}

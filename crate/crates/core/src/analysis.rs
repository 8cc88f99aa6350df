//! Ensemble statistics and the fitted scaling relations built on them.
//!
//! Costs are averaged per `(N, chi)` and normalized by the ensemble-mean exact
//! cost of the same size (a ratio of means). Bond dimensions above the exact
//! value `2^(N/2)` are folded onto it, since the simulation clamps them.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::mps::exact_chi;
use crate::optimize::{bfgs_minimize, OptimizerOptions, RunRecord};

/// Floor applied to variances before they are inverted into weights.
pub const VARIANCE_FLOOR: f64 = 1e-12;

/// Upper end of the small-X regime of the power law.
pub const POWER_LAW_X_MAX: f64 = 0.1;

pub const DEFAULT_INVERSION_BINS: usize = 20;

/// Mean and standard error (`sd / sqrt(n)`, sample sd) of a non-empty slice.
pub fn mean_stderr(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(invalid("cannot average an empty group"));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return Ok((mean, 0.0));
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((mean, (var / n).sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanValue {
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
}

impl MeanValue {
    fn of(values: &[f64]) -> Result<Option<Self>> {
        if values.is_empty() {
            return Ok(None);
        }
        let (mean, stderr) = mean_stderr(values)?;
        Ok(Some(MeanValue { mean, stderr, count: values.len() }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleRow {
    pub n: usize,
    /// Effective bond dimension, `min(chi, 2^(N/2))`.
    pub chi: usize,
    pub mean_cost: f64,
    pub stderr: f64,
    pub n_instances: usize,
    pub mean_exact_cost: Option<f64>,
    pub exact_stderr: Option<f64>,
    pub pmin: Option<MeanValue>,
    pub entropy: Option<MeanValue>,
    pub cmin: Option<MeanValue>,
    pub mean_edges: Option<f64>,
}

/// Rows sorted by `(N, chi)`, all sharing one family and depth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleTable {
    pub family: String,
    pub p: usize,
    pub rows: Vec<EnsembleRow>,
}

impl EnsembleTable {
    pub fn sizes(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.n).collect::<BTreeSet<_>>().into_iter().collect()
    }

    pub fn chis(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.chi).collect::<BTreeSet<_>>().into_iter().collect()
    }

    pub fn row(&self, n: usize, chi: usize) -> Option<&EnsembleRow> {
        self.rows.iter().find(|r| r.n == n && r.chi == chi.min(exact_chi(n)))
    }

    /// Keeps rows whose size and effective bond dimension satisfy `keep`.
    pub fn filter(&self, keep: impl Fn(&EnsembleRow) -> bool) -> EnsembleTable {
        EnsembleTable { family: self.family.clone(), p: self.p, rows: self.rows.iter().filter(|r| keep(r)).cloned().collect() }
    }
}

/// Exact reference for one size: mean exact cost and its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactRef {
    pub mean: f64,
    pub stderr: f64,
}

/// Groups successful records by `(N, effective chi)`. Exact references come
/// from `exact_refs` when given for a size, otherwise from that size's
/// `chi >= 2^(N/2)` rows. Records carrying an `error` are skipped.
pub fn build_ensemble(records: &[RunRecord], exact_refs: Option<&BTreeMap<usize, ExactRef>>) -> Result<EnsembleTable> {
    let ok: Vec<&RunRecord> = records.iter().filter(|r| r.is_ok()).collect();
    let first = ok.first().ok_or_else(|| invalid("no successful records to aggregate"))?;
    let family = first.family.clone().unwrap_or_else(|| "unknown".to_string());
    let p = first.p;
    for r in &ok {
        if r.p != p || r.family.as_deref().unwrap_or("unknown") != family {
            return Err(invalid(format!(
                "records mix (family, p): ({family}, {p}) and ({}, {})",
                r.family.as_deref().unwrap_or("unknown"),
                r.p
            )));
        }
    }
    let mut groups: BTreeMap<(usize, usize), Vec<&RunRecord>> = BTreeMap::new();
    for r in &ok {
        groups.entry((r.n, r.chi.min(exact_chi(r.n)))).or_default().push(r);
    }
    let mut exact: BTreeMap<usize, ExactRef> = BTreeMap::new();
    for (&(n, chi), recs) in &groups {
        if chi == exact_chi(n) {
            let costs: Vec<f64> = recs.iter().map(|r| r.best_cost).collect();
            let (mean, stderr) = mean_stderr(&costs)?;
            exact.insert(n, ExactRef { mean, stderr });
        }
    }
    if let Some(refs) = exact_refs {
        exact.extend(refs.iter().map(|(&n, &e)| (n, e)));
    }
    let mut rows = Vec::with_capacity(groups.len());
    for ((n, chi), recs) in groups {
        let costs: Vec<f64> = recs.iter().map(|r| r.best_cost).collect();
        let (mean_cost, stderr) = mean_stderr(&costs)?;
        let collect = |f: &dyn Fn(&RunRecord) -> Option<f64>| -> Vec<f64> { recs.iter().filter_map(|r| f(r)).collect() };
        let edges = collect(&|r| r.n_edges.map(|e| e as f64));
        rows.push(EnsembleRow {
            n,
            chi,
            mean_cost,
            stderr,
            n_instances: recs.len(),
            mean_exact_cost: exact.get(&n).map(|e| e.mean),
            exact_stderr: exact.get(&n).map(|e| e.stderr),
            pmin: MeanValue::of(&collect(&|r| r.pmin))?,
            entropy: MeanValue::of(&collect(&|r| r.entropy))?,
            cmin: MeanValue::of(&collect(&|r| r.c_min))?,
            mean_edges: MeanValue::of(&edges)?.map(|m| m.mean),
        });
    }
    Ok(EnsembleTable { family, p, rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollapsePoint {
    pub x: f64,
    pub y: f64,
    pub n: usize,
    pub chi: usize,
    /// Inverse variance of `y`.
    pub weight: f64,
}

fn weight_of(var: f64) -> f64 {
    1.0 / var.max(VARIANCE_FLOOR)
}

fn ln_chi_over_n(chi: usize, n: usize) -> f64 {
    (chi as f64).ln() / n as f64
}

fn ratio_point(row: &EnsembleRow, num: f64, num_se: f64, den: f64, den_se: f64) -> CollapsePoint {
    let y = num / den;
    let var = y * y * ((num_se / num).powi(2) + (den_se / den).powi(2));
    let var = if var.is_finite() { var } else { 0.0 };
    CollapsePoint { x: ln_chi_over_n(row.chi, row.n), y, n: row.n, chi: row.chi, weight: weight_of(var) }
}

/// Points `(ln chi / N, C(N, chi) / C(N, chi_exact))`.
pub fn collapse_cost(table: &EnsembleTable) -> Result<Vec<CollapsePoint>> {
    table
        .rows
        .iter()
        .map(|row| {
            let exact = row
                .mean_exact_cost
                .ok_or_else(|| Error::InsufficientData(format!("no exact reference for N={}", row.n)))?;
            if exact == 0.0 {
                return Err(Error::DegenerateNormalization(format!("exact mean cost is zero for N={}", row.n)));
            }
            if row.chi == exact_chi(row.n) {
                // Numerator and denominator are the same ensemble.
                return Ok(CollapsePoint {
                    x: ln_chi_over_n(row.chi, row.n),
                    y: row.mean_cost / exact,
                    n: row.n,
                    chi: row.chi,
                    weight: weight_of(0.0),
                });
            }
            Ok(ratio_point(row, row.mean_cost, row.stderr, exact, row.exact_stderr.unwrap_or(0.0)))
        })
        .collect()
}

/// Points `(ln chi / N, C(N, chi) / C_min(N))`, where `C_min` is the mean true
/// minimum cost.
pub fn collapse_vs_cmin(table: &EnsembleTable) -> Result<Vec<CollapsePoint>> {
    table
        .rows
        .iter()
        .map(|row| {
            let cmin = row.cmin.ok_or_else(|| Error::InsufficientData(format!("no C_min for N={}", row.n)))?;
            if cmin.mean == 0.0 {
                return Err(Error::DegenerateNormalization(format!("mean C_min is zero for N={}", row.n)));
            }
            Ok(ratio_point(row, row.mean_cost, row.stderr, cmin.mean, cmin.stderr))
        })
        .collect()
}

/// Points `(ln chi / N, S / N)` from mean mid-cut entropies.
pub fn collapse_entropy(table: &EnsembleTable) -> Result<Vec<CollapsePoint>> {
    table
        .rows
        .iter()
        .map(|row| {
            let s = row.entropy.ok_or_else(|| Error::InsufficientData(format!("no entropy for N={}, chi={}", row.n, row.chi)))?;
            let n = row.n as f64;
            Ok(CollapsePoint {
                x: ln_chi_over_n(row.chi, row.n),
                y: s.mean / n,
                n: row.n,
                chi: row.chi,
                weight: weight_of((s.stderr / n).powi(2)),
            })
        })
        .collect()
}

/// `r(N) = C(N, chi_exact) / C_min(N)` per size.
pub fn approximation_ratio(table: &EnsembleTable) -> Result<Vec<(usize, f64)>> {
    let mut out = Vec::new();
    for n in table.sizes() {
        let row = table
            .rows
            .iter()
            .find(|r| r.n == n && r.cmin.is_some() && r.mean_exact_cost.is_some())
            .ok_or_else(|| Error::InsufficientData(format!("no exact cost and C_min pair for N={n}")))?;
        let cmin = row.cmin.expect("checked").mean;
        if cmin == 0.0 {
            return Err(Error::DegenerateNormalization(format!("mean C_min is zero for N={n}")));
        }
        out.push((n, row.mean_exact_cost.expect("checked") / cmin));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
    pub intercept_err: f64,
    pub slope_err: f64,
    /// Unweighted RMS of the residuals.
    pub residual_rms: f64,
    pub n_points: usize,
}

/// Weighted least squares for `y = intercept + slope * x`. With
/// `absolute_sigma` the weights are taken as exact inverse variances;
/// otherwise the covariance is rescaled by the reduced chi-square.
pub fn weighted_linear_fit(x: &[f64], y: &[f64], w: &[f64], absolute_sigma: bool) -> Result<LinearFit> {
    let n = x.len();
    if n != y.len() || n != w.len() {
        return Err(invalid("fit inputs differ in length"));
    }
    if n < 2 {
        return Err(Error::InsufficientData(format!("linear fit needs 2 points, got {n}")));
    }
    if x.iter().chain(y).chain(w).any(|v| !v.is_finite()) || w.iter().any(|&v| v <= 0.0) {
        return Err(invalid("fit inputs must be finite with positive weights"));
    }
    let s: f64 = w.iter().sum();
    let xm = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / s;
    let ym = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / s;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for i in 0..n {
        sxx += w[i] * (x[i] - xm).powi(2);
        sxy += w[i] * (x[i] - xm) * (y[i] - ym);
    }
    if !(sxx > 0.0) {
        return Err(Error::InsufficientData("all x values coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let resid: Vec<f64> = (0..n).map(|i| y[i] - intercept - slope * x[i]).collect();
    let chi2: f64 = resid.iter().zip(w).map(|(r, wi)| wi * r * r).sum();
    let scale = if absolute_sigma || n <= 2 { 1.0 } else { chi2 / (n - 2) as f64 };
    let residual_rms = (resid.iter().map(|r| r * r).sum::<f64>() / n as f64).sqrt();
    Ok(LinearFit {
        intercept,
        slope,
        intercept_err: (scale * (1.0 / s + xm * xm / sxx)).sqrt(),
        slope_err: (scale / sxx).sqrt(),
        residual_rms,
        n_points: n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FitKind {
    PowerLaw { a: f64, alpha: f64 },
    Extrapolation { c0: f64, c1: f64 },
    PminCollapse { omega: f64, lambda: f64, d: f64, delta: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollapseFit {
    #[serde(flatten)]
    pub kind: FitKind,
    /// Standard errors in the order the parameters appear in `kind`; `None`
    /// where no error estimate exists.
    pub parameter_errors: Vec<Option<f64>>,
    pub residual_rms: f64,
    pub n_points: usize,
    pub excluded_n: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLawOptions {
    pub x_max: f64,
    pub exclude_n: Vec<usize>,
    /// Weight `ln y` by the propagated inverse variances.
    pub weighted: bool,
}

impl Default for PowerLawOptions {
    fn default() -> Self {
        PowerLawOptions { x_max: POWER_LAW_X_MAX, exclude_n: vec![8], weighted: true }
    }
}

/// Fits `y = A x^alpha` by least squares of `ln y` on `ln x` over the points
/// with `0 < x <= x_max`, `y > 0` and `N` not excluded.
pub fn fit_power_law(points: &[CollapsePoint], opts: &PowerLawOptions) -> Result<CollapseFit> {
    let used: Vec<&CollapsePoint> = points
        .iter()
        .filter(|p| p.x > 0.0 && p.x <= opts.x_max && p.y > 0.0 && !opts.exclude_n.contains(&p.n))
        .collect();
    if used.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "power-law fit needs 3 points with x <= {}, got {}",
            opts.x_max,
            used.len()
        )));
    }
    let lx: Vec<f64> = used.iter().map(|p| p.x.ln()).collect();
    let ly: Vec<f64> = used.iter().map(|p| p.y.ln()).collect();
    let w: Vec<f64> = used.iter().map(|p| if opts.weighted { p.weight * p.y * p.y } else { 1.0 }).collect();
    let fit = weighted_linear_fit(&lx, &ly, &w, false)?;
    let a = fit.intercept.exp();
    Ok(CollapseFit {
        kind: FitKind::PowerLaw { a, alpha: fit.slope },
        parameter_errors: vec![Some(a * fit.intercept_err), Some(fit.slope_err)],
        residual_rms: fit.residual_rms,
        n_points: used.len(),
        excluded_n: opts.exclude_n.clone(),
    })
}

/// Fits `C(N, chi_exact) / |E| = c0 + c1 / N` over the sizes in the table.
pub fn fit_extrapolation(table: &EnsembleTable) -> Result<CollapseFit> {
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut w = Vec::new();
    for n in table.sizes() {
        let Some(row) = table.rows.iter().find(|r| r.n == n && r.mean_exact_cost.is_some()) else {
            continue;
        };
        let edges = table
            .rows
            .iter()
            .filter(|r| r.n == n)
            .find_map(|r| r.mean_edges)
            .ok_or_else(|| Error::InsufficientData(format!("edge counts missing for N={n}")))?;
        x.push(1.0 / n as f64);
        y.push(row.mean_exact_cost.expect("checked") / edges);
        w.push(weight_of((row.exact_stderr.unwrap_or(0.0) / edges).powi(2)));
    }
    if x.len() < 3 {
        return Err(Error::InsufficientData(format!("extrapolation needs 3 sizes with exact costs, got {}", x.len())));
    }
    let fit = weighted_linear_fit(&x, &y, &w, false)?;
    Ok(CollapseFit {
        kind: FitKind::Extrapolation { c0: fit.intercept, c1: fit.slope },
        parameter_errors: vec![Some(fit.intercept_err), Some(fit.slope_err)],
        residual_rms: fit.residual_rms,
        n_points: x.len(),
        excluded_n: Vec::new(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Inversion {
    pub x_target: f64,
    pub chi_estimate: f64,
}

/// Weighted bin means of the points over `bins` equal-width bins in `x`;
/// empty bins are dropped.
pub fn bin_points(points: &[CollapsePoint], bins: usize) -> Result<Vec<(f64, f64)>> {
    if bins == 0 {
        return Err(invalid("bin count must be positive"));
    }
    if points.is_empty() {
        return Err(Error::InsufficientData("no points to bin".into()));
    }
    let lo = points.iter().map(|p| p.x).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / bins as f64;
    let mut acc = vec![(0.0, 0.0, 0.0); bins];
    for p in points {
        let b = if width > 0.0 { (((p.x - lo) / width) as usize).min(bins - 1) } else { 0 };
        acc[b].0 += p.weight * p.x;
        acc[b].1 += p.weight * p.y;
        acc[b].2 += p.weight;
    }
    Ok(acc.into_iter().filter(|a| a.2 > 0.0).map(|(sx, sy, sw)| (sx / sw, sy / sw)).collect())
}

/// Inverts the binned collapse curve: `x = F^-1(y_target)` by piecewise-linear
/// interpolation and `chi = exp(x * n)`, unrounded.
pub fn invert_scaling(points: &[CollapsePoint], y_target: f64, n: usize, bins: usize) -> Result<Inversion> {
    if n == 0 || !y_target.is_finite() {
        return Err(invalid("inversion needs n >= 1 and a finite target"));
    }
    let curve = bin_points(points, bins)?;
    for w in curve.windows(2) {
        if w[1].1 < w[0].1 {
            return Err(Error::DegenerateCurve(format!(
                "binned curve decreases from y={} at x={} to y={} at x={}",
                w[0].1, w[0].0, w[1].1, w[1].0
            )));
        }
    }
    let (ymin, ymax) = (curve[0].1, curve[curve.len() - 1].1);
    if y_target < ymin || y_target > ymax {
        return Err(Error::ExtrapolationRefused { target: y_target, min: ymin, max: ymax });
    }
    let mut x_target = curve[curve.len() - 1].0;
    for w in curve.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if y_target <= y1 {
            x_target = if y1 > y0 { x0 + (y_target - y0) / (y1 - y0) * (x1 - x0) } else { x0 };
            break;
        }
    }
    if curve.len() == 1 || y_target == ymin {
        x_target = curve[0].0;
    }
    Ok(Inversion { x_target, chi_estimate: (x_target * n as f64).exp() })
}

/// Inverts the small-X power law `y = A x^alpha` instead of the measured curve,
/// for targets below the measured range.
pub fn invert_power_law(y_target: f64, n: usize, a: f64, alpha: f64) -> Result<Inversion> {
    if !(a > 0.0 && alpha > 0.0 && y_target > 0.0) || n == 0 {
        return Err(invalid("power-law inversion needs A, alpha, y > 0 and n >= 1"));
    }
    let x_target = (y_target / a).powf(1.0 / alpha);
    Ok(Inversion { x_target, chi_estimate: (x_target * n as f64).exp() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityChi {
    pub chi: f64,
    pub ln_chi_per_n: f64,
    /// Implied global fidelity `f^K`.
    pub global_fidelity: f64,
    /// Whether `ln chi / N` stays inside the small-X regime of the power law.
    pub in_regime: bool,
}

/// Bond dimension matching a per-gate fidelity `f` over `k` gates on `n`
/// qubits: `chi = exp(n (f^k / A)^(1/alpha))`.
pub fn chi_from_fidelity(f: f64, k: usize, n: usize, a: f64, alpha: f64) -> Result<FidelityChi> {
    if !(f > 0.0 && f <= 1.0) {
        return Err(invalid(format!("fidelity must lie in (0, 1], got {f}")));
    }
    if !(a > 0.0 && alpha > 0.0 && a.is_finite() && alpha.is_finite()) {
        return Err(invalid("A and alpha must be positive"));
    }
    if n == 0 {
        return Err(invalid("n must be positive"));
    }
    let global_fidelity = f.powi(k as i32);
    let x = (global_fidelity / a).powf(1.0 / alpha);
    Ok(FidelityChi { chi: (x * n as f64).exp(), ln_chi_per_n: x, global_fidelity, in_regime: x <= POWER_LAW_X_MAX })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Flatness {
    pub chi: usize,
    pub slope: f64,
    pub stderr: f64,
    pub flat: bool,
}

/// Regression of mean cost against `N` at one bond dimension, weighted by the
/// ensemble standard errors. Flat when `|slope| <= 2 stderr`.
pub fn flatness_check(table: &EnsembleTable, chi: usize) -> Result<Flatness> {
    let rows: Vec<&EnsembleRow> = table.rows.iter().filter(|r| r.chi == chi && chi < exact_chi(r.n)).collect();
    if rows.len() < 3 {
        return Err(Error::InsufficientData(format!("flatness needs 3 sizes below exact at chi={chi}, got {}", rows.len())));
    }
    let x: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.mean_cost).collect();
    let have_errors = rows.iter().all(|r| r.stderr > 0.0);
    let w: Vec<f64> = rows.iter().map(|r| if have_errors { weight_of(r.stderr * r.stderr) } else { 1.0 }).collect();
    let fit = weighted_linear_fit(&x, &y, &w, have_errors)?;
    Ok(Flatness { chi, slope: fit.slope, stderr: fit.slope_err, flat: fit.slope.abs() <= 2.0 * fit.slope_err })
}

/// A point of one curve in a family indexed by `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub n: usize,
    pub x: f64,
    pub y: f64,
}

impl From<&CollapsePoint> for CurvePoint {
    fn from(p: &CollapsePoint) -> Self {
        CurvePoint { n: p.n, x: p.x, y: p.y }
    }
}

fn curves_by_n(points: &[CurvePoint]) -> BTreeMap<usize, Vec<(f64, f64)>> {
    let mut curves: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
    for p in points {
        curves.entry(p.n).or_default().push((p.x, p.y));
    }
    for c in curves.values_mut() {
        c.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    curves
}

fn interpolate(curve: &[(f64, f64)], x: f64) -> Option<f64> {
    let (first, last) = (curve.first()?, curve.last()?);
    if x < first.0 || x > last.0 {
        return None;
    }
    if curve.len() == 1 {
        return Some(first.1);
    }
    let k = curve.partition_point(|p| p.0 < x).clamp(1, curve.len() - 1);
    let ((x0, y0), (x1, y1)) = (curve[k - 1], curve[k]);
    if x1 == x0 {
        return Some(0.5 * (y0 + y1));
    }
    Some(y0 + (x - x0) / (x1 - x0) * (y1 - y0))
}

/// Collapse quality: RMS over all (point, other-size curve) pairs of the
/// vertical distance from the point to the other curve's linear interpolant,
/// counting only pairs where the point lies inside the other curve's x range.
/// Returns the RMS and the number of overlapping pairs.
pub fn interpolation_scatter(points: &[CurvePoint]) -> (f64, usize) {
    let curves = curves_by_n(points);
    let mut sum = 0.0;
    let mut count = 0;
    for p in points {
        for (&m, curve) in &curves {
            if m == p.n {
                continue;
            }
            if let Some(v) = interpolate(curve, p.x) {
                sum += (p.y - v).powi(2);
                count += 1;
            }
        }
    }
    if count == 0 {
        (f64::INFINITY, 0)
    } else {
        ((sum / count as f64).sqrt(), count)
    }
}

/// [`interpolation_scatter`] divided by the standard deviation of all `y`, so
/// curves on different scales can be compared.
pub fn relative_scatter(points: &[CurvePoint]) -> Result<f64> {
    let sizes: BTreeSet<usize> = points.iter().map(|p| p.n).collect();
    if sizes.len() < 2 {
        return Err(Error::InsufficientData("collapse untestable with one size".into()));
    }
    let ys: Vec<f64> = points.iter().map(|p| p.y).collect();
    let (mean, _) = mean_stderr(&ys)?;
    let sd = (ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / ys.len() as f64).sqrt();
    if sd == 0.0 {
        return Ok(0.0);
    }
    let (s, count) = interpolation_scatter(points);
    if count == 0 {
        return Err(Error::InsufficientData("curves of different sizes do not overlap".into()));
    }
    Ok(s / sd)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PminCollapseOptions {
    /// Grid points per axis over `1/Omega` and `1/Lambda` in `[0, inv_max]`.
    pub grid: usize,
    pub inv_max: f64,
    /// Tail fit uses rescaled points with `X <= tail_x_max`.
    pub tail_x_max: f64,
    pub optimizer: OptimizerOptions,
}

impl Default for PminCollapseOptions {
    fn default() -> Self {
        PminCollapseOptions {
            grid: 41,
            inv_max: 1.0,
            tail_x_max: 1.0,
            optimizer: OptimizerOptions { max_iterations: 200, gradient_tolerance: 1e-9, fd_step: 1e-5, restarts: 1, seed: 0 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PminCollapse {
    pub fit: CollapseFit,
    /// Log-space scatter of the raw `(ln chi, ln p_min)` curves.
    pub scatter_before: f64,
    pub scatter_after: f64,
    /// Rescaled points `(n, X, Y)`.
    pub points: Vec<CurvePoint>,
}

struct PminData {
    n: Vec<f64>,
    ln_chi: Vec<f64>,
    ln_p: Vec<f64>,
    sizes: Vec<usize>,
}

impl PminData {
    fn rescaled(&self, inv_omega: f64, inv_lambda: f64) -> Vec<CurvePoint> {
        (0..self.n.len())
            .map(|i| CurvePoint {
                n: self.sizes[i],
                x: self.ln_chi[i] - self.n[i] * inv_lambda,
                y: self.ln_p[i] + self.n[i] * inv_omega,
            })
            .collect()
    }

    /// Scatter of the rescaled log curves; configurations where fewer than half
    /// the points overlap another curve are rejected.
    fn scatter(&self, inv_omega: f64, inv_lambda: f64) -> f64 {
        let (s, count) = interpolation_scatter(&self.rescaled(inv_omega, inv_lambda));
        if 2 * count < self.n.len() {
            f64::INFINITY
        } else {
            s
        }
    }
}

/// Finds `(Omega, Lambda)` collapsing `p_min = e^(-N/Omega) H(chi e^(-N/Lambda))`
/// by minimizing the log-space interpolation scatter (grid over the inverse
/// scales, then BFGS), then fits `H(X) = D X^delta` on the `X <= tail_x_max` tail.
pub fn collapse_pmin(table: &EnsembleTable, opts: &PminCollapseOptions) -> Result<PminCollapse> {
    let rows: Vec<(&EnsembleRow, f64)> =
        table.rows.iter().filter_map(|r| r.pmin.map(|p| (r, p.mean))).filter(|(_, p)| *p > 0.0).collect();
    let sizes: BTreeSet<usize> = rows.iter().map(|(r, _)| r.n).collect();
    let chis: BTreeSet<usize> = rows.iter().map(|(r, _)| r.chi).collect();
    if sizes.len() < 3 || chis.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "p_min collapse needs 3 sizes and 4 bond dimensions, got {} and {}",
            sizes.len(),
            chis.len()
        )));
    }
    if opts.grid < 2 || !(opts.inv_max > 0.0) {
        return Err(invalid("p_min grid needs 2 points per axis and a positive range"));
    }
    let data = PminData {
        n: rows.iter().map(|(r, _)| r.n as f64).collect(),
        ln_chi: rows.iter().map(|(r, _)| (r.chi as f64).ln()).collect(),
        ln_p: rows.iter().map(|(_, p)| p.ln()).collect(),
        sizes: rows.iter().map(|(r, _)| r.n).collect(),
    };
    let baseline = data.scatter(0.0, 0.0);
    let step = opts.inv_max / (opts.grid - 1) as f64;
    let mut best = (baseline, 0.0, 0.0);
    for i in 0..opts.grid {
        for j in 0..opts.grid {
            let (u, v) = (i as f64 * step, j as f64 * step);
            let s = data.scatter(u, v);
            if s < best.0 {
                best = (s, u, v);
            }
        }
    }
    let penalty = 1e6 * baseline.max(1.0);
    let objective = |z: &[f64]| -> Result<f64> {
        let s = data.scatter(z[0], z[1]);
        Ok(if s.is_finite() && z[0] >= 0.0 && z[1] >= 0.0 { s } else { penalty })
    };
    if let Ok(r) = bfgs_minimize(objective, &[best.1, best.2], &opts.optimizer) {
        if r.f < best.0 {
            best = (r.f, r.x[0], r.x[1]);
        }
    }
    let (after, u, v) = best;
    if !(after < baseline) {
        return Err(Error::CollapseFailure { fitted: after, baseline });
    }
    let points = data.rescaled(u, v);
    let tail: Vec<&CurvePoint> = points.iter().filter(|p| p.x <= opts.tail_x_max.ln()).collect();
    if tail.len() < 3 {
        return Err(Error::InsufficientData(format!("tail fit needs 3 points with X <= {}, got {}", opts.tail_x_max, tail.len())));
    }
    let lx: Vec<f64> = tail.iter().map(|p| p.x).collect();
    let ly: Vec<f64> = tail.iter().map(|p| p.y).collect();
    let fit = weighted_linear_fit(&lx, &ly, &vec![1.0; tail.len()], false)?;
    let d = fit.intercept.exp();
    let omega = 1.0 / u;
    let lambda = 1.0 / v;
    Ok(PminCollapse {
        fit: CollapseFit {
            kind: FitKind::PminCollapse { omega, lambda, d, delta: fit.slope },
            parameter_errors: vec![None, None, Some(d * fit.intercept_err), Some(fit.slope_err)],
            residual_rms: after,
            n_points: points.len(),
            excluded_n: Vec::new(),
        },
        scatter_before: baseline,
        scatter_after: after,
        points: points
            .into_iter()
            .map(|p| CurvePoint { n: p.n, x: p.x.exp(), y: p.y.exp() })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(n: usize, chi: usize, cost: f64) -> RunRecord {
        RunRecord {
            graph_id: format!("g{n}"),
            n,
            p: 1,
            chi,
            method: "mpo-per-layer".into(),
            ordering_seed: 0,
            best_cost: cost,
            gammas: vec![0.5],
            betas: vec![0.3],
            norm: 1.0,
            restarts: 1,
            seed: 0,
            family: Some("cubic".into()),
            n_edges: Some(3 * n / 2),
            chi_effective: None,
            normalize_mode: None,
            cadence: None,
            optimizer: None,
            best_objective: None,
            pmin: None,
            entropy: None,
            c_min: None,
            exact: None,
            error: None,
        }
    }

    fn row(n: usize, chi: usize, mean: f64, exact: f64) -> EnsembleRow {
        EnsembleRow {
            n,
            chi,
            mean_cost: mean,
            stderr: 0.0,
            n_instances: 1,
            mean_exact_cost: Some(exact),
            exact_stderr: Some(0.0),
            pmin: None,
            entropy: None,
            cmin: None,
            mean_edges: Some(1.5 * n as f64),
        }
    }

    fn table(rows: Vec<EnsembleRow>) -> EnsembleTable {
        EnsembleTable { family: "cubic".into(), p: 1, rows }
    }

    #[test]
    fn mean_and_stderr_of_two_values() {
        let (m, se) = mean_stderr(&[-1.0, -3.0]).unwrap();
        assert_eq!(m, -2.0);
        assert!((se - 1.0).abs() < 1e-15);
        assert_eq!(mean_stderr(&[4.0]).unwrap(), (4.0, 0.0));
        assert!(mean_stderr(&[]).is_err());
    }

    #[test]
    fn ensemble_groups_and_folds_chi_above_exact() {
        let recs = vec![
            record(8, 4, -1.0),
            record(8, 4, -3.0),
            record(8, 16, -4.0),
            record(8, 64, -6.0),
            RunRecord { error: Some("boom".into()), ..record(8, 4, 100.0) },
        ];
        let t = build_ensemble(&recs, None).unwrap();
        assert_eq!(t.chis(), vec![4, 16]);
        let r4 = t.row(8, 4).unwrap();
        assert_eq!((r4.mean_cost, r4.n_instances), (-2.0, 2));
        assert!((r4.stderr - 1.0).abs() < 1e-15);
        assert_eq!(r4.mean_exact_cost, Some(-5.0));
        assert_eq!(t.row(8, 1024).unwrap().n_instances, 2);
        assert_eq!(r4.mean_edges, Some(12.0));
    }

    #[test]
    fn supplied_exact_reference_overrides_computed_one() {
        let recs = vec![record(8, 4, -2.0), record(8, 16, -4.0)];
        let refs = BTreeMap::from([(8, ExactRef { mean: -8.0, stderr: 0.5 })]);
        let t = build_ensemble(&recs, Some(&refs)).unwrap();
        assert_eq!(t.row(8, 4).unwrap().mean_exact_cost, Some(-8.0));
        let pts = collapse_cost(&t).unwrap();
        assert!((pts[0].y - 0.25).abs() < 1e-15);
    }

    #[test]
    fn mixed_depths_are_rejected() {
        let recs = vec![record(8, 4, -2.0), RunRecord { p: 2, gammas: vec![0.0; 2], betas: vec![0.0; 2], ..record(8, 4, -2.0) }];
        assert!(build_ensemble(&recs, None).is_err());
        assert!(build_ensemble(&[], None).is_err());
    }

    #[test]
    fn collapse_errors_are_typed() {
        let mut r = row(8, 4, -1.0, 0.0);
        assert!(matches!(collapse_cost(&table(vec![r.clone()])), Err(Error::DegenerateNormalization(_))));
        r.mean_exact_cost = None;
        assert!(matches!(collapse_cost(&table(vec![r])), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn linear_fit_recovers_exact_line_and_known_errors() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        let f = weighted_linear_fit(&x, &y, &[1.0; 4], true).unwrap();
        assert!((f.intercept - 2.0).abs() < 1e-14 && (f.slope + 0.5).abs() < 1e-14);
        // Unit weights with absolute sigma: var(slope) = 1 / Sxx = 1 / 5.
        assert!((f.slope_err - (0.2f64).sqrt()).abs() < 1e-14);
        assert!(weighted_linear_fit(&[1.0, 1.0], &[0.0, 1.0], &[1.0, 1.0], true).is_err());
        assert!(weighted_linear_fit(&[1.0], &[0.0], &[1.0], true).is_err());
    }

    fn power_law_points(a: f64, alpha: f64) -> Vec<CollapsePoint> {
        let mut pts = Vec::new();
        for n in [8usize, 10, 12, 14, 16] {
            for k in 1..=(n / 2) {
                let chi = 1usize << k;
                let x = (chi as f64).ln() / n as f64;
                let y = if n == 8 { 0.5 } else { (a * x.powf(alpha)).min(1.0) };
                pts.push(CollapsePoint { x, y, n, chi, weight: 1.0 });
            }
        }
        pts
    }

    #[test]
    fn power_law_round_trip() {
        let pts = power_law_points(6.9, 1.1);
        let fit = fit_power_law(&pts, &PowerLawOptions::default()).unwrap();
        let FitKind::PowerLaw { a, alpha } = fit.kind else { panic!("wrong fit kind") };
        assert!((a - 6.9).abs() < 1e-9 && (alpha - 1.1).abs() < 1e-12);
        assert!(fit.n_points >= 3 && fit.excluded_n == vec![8]);
        let few = vec![pts[0]];
        assert!(matches!(fit_power_law(&few, &PowerLawOptions::default()), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn extrapolation_recovers_intercept() {
        let rows: Vec<EnsembleRow> = [8usize, 10, 12, 14, 16]
            .iter()
            .map(|&n| {
                let per_edge = -0.385 + 0.7 / n as f64;
                let exact = per_edge * 1.5 * n as f64;
                row(n, exact_chi(n), exact, exact)
            })
            .collect();
        let fit = fit_extrapolation(&table(rows)).unwrap();
        let FitKind::Extrapolation { c0, c1 } = fit.kind else { panic!("wrong fit kind") };
        assert!((c0 + 0.385).abs() < 1e-12 && (c1 - 0.7).abs() < 1e-10);
    }

    #[test]
    fn inversion_of_linear_curve() {
        // y = x on [0, 1]: y = 0.5 at N = 4 gives chi = e^2.
        let pts: Vec<CollapsePoint> =
            (0..=10).map(|i| CollapsePoint { x: i as f64 / 10.0, y: i as f64 / 10.0, n: 4, chi: 1, weight: 1.0 }).collect();
        let inv = invert_scaling(&pts, 0.5, 4, 10).unwrap();
        assert!((inv.x_target - 0.5).abs() < 1e-12);
        assert!((inv.chi_estimate - 2f64.exp()).abs() < 1e-9);
        assert!(matches!(invert_scaling(&pts, 1.5, 4, 10), Err(Error::ExtrapolationRefused { .. })));
        let mut bad = pts.clone();
        bad[5].y = -1.0;
        assert!(matches!(invert_scaling(&bad, 0.5, 4, 10), Err(Error::DegenerateCurve(_))));
    }

    #[test]
    fn power_law_inversion_at_unit_target() {
        // y = 1 with A = 2, alpha = 1 gives x = 1/2.
        let inv = invert_power_law(1.0, 1, 2.0, 1.0).unwrap();
        assert!((inv.x_target - 0.5).abs() < 1e-15);
        assert!((inv.chi_estimate - 0.5f64.exp()).abs() < 1e-15);
        assert!(invert_power_law(0.0, 1, 2.0, 1.0).is_err());
    }

    #[test]
    fn fidelity_to_chi() {
        // One gate at f = 0.5, A = 2, alpha = 1, N = 10: x = 1/4, chi = e^2.5.
        let r = chi_from_fidelity(0.5, 1, 10, 2.0, 1.0).unwrap();
        assert!((r.ln_chi_per_n - 0.25).abs() < 1e-15);
        assert!((r.chi - 2.5f64.exp()).abs() < 1e-12);
        assert!(!r.in_regime);
        let lo = chi_from_fidelity(0.99, 100, 50, 6.9, 1.1).unwrap();
        let hi = chi_from_fidelity(0.999, 100, 50, 6.9, 1.1).unwrap();
        assert!(hi.chi > lo.chi && lo.in_regime);
        assert!(chi_from_fidelity(1.5, 1, 10, 2.0, 1.0).is_err());
    }

    #[test]
    fn flatness_of_constant_and_sloped_costs() {
        let flat = table([12usize, 16, 20, 24].iter().map(|&n| EnsembleRow { stderr: 0.1, ..row(n, 4, -3.0, -5.0) }).collect());
        let f = flatness_check(&flat, 4).unwrap();
        assert!(f.flat && f.slope.abs() < 1e-14);
        let sloped =
            table([12usize, 16, 20, 24].iter().map(|&n| EnsembleRow { stderr: 0.01, ..row(n, 4, -0.5 * n as f64, -5.0) }).collect());
        assert!(!flatness_check(&sloped, 4).unwrap().flat);
        assert!(flatness_check(&flat, 8).is_err());
    }

    #[test]
    fn scatter_vanishes_for_identical_curves() {
        let pts: Vec<CurvePoint> = [10usize, 12]
            .iter()
            .flat_map(|&n| (0..5).map(move |i| CurvePoint { n, x: i as f64, y: (i * i) as f64 }))
            .collect();
        assert_eq!(interpolation_scatter(&pts), (0.0, 10));
        assert_eq!(relative_scatter(&pts).unwrap(), 0.0);
        let one: Vec<CurvePoint> = pts.iter().filter(|p| p.n == 10).copied().collect();
        assert!(relative_scatter(&one).is_err());
    }

    fn kinked_h(x: f64) -> f64 {
        1.5 * x.min(1.0).powi(2) * x.max(1.0).powf(0.5)
    }

    #[test]
    fn pmin_collapse_recovers_synthetic_scales() {
        let (omega, lambda) = (3.3, 5.0);
        let mut rows = Vec::new();
        for n in [8usize, 10, 12, 14] {
            for k in 1..=8 {
                let chi = 1usize << k;
                let x = chi as f64 * (-(n as f64) / lambda).exp();
                let p = (-(n as f64) / omega).exp() * kinked_h(x);
                rows.push(EnsembleRow { pmin: Some(MeanValue { mean: p, stderr: 0.0, count: 1 }), ..row(n, chi, -1.0, -2.0) });
            }
        }
        let c = collapse_pmin(&table(rows), &PminCollapseOptions::default()).unwrap();
        let FitKind::PminCollapse { omega: o, lambda: l, d, delta } = c.fit.kind else { panic!("wrong fit kind") };
        assert!((o - omega).abs() < 0.05 * omega, "omega {o}");
        assert!((l - lambda).abs() < 0.05 * lambda, "lambda {l}");
        assert!((d - 1.5).abs() < 0.1, "D {d}");
        assert!((delta - 2.0).abs() < 0.1, "delta {delta}");
        assert!(c.scatter_after < 0.05 * c.scatter_before, "{} vs {}", c.scatter_after, c.scatter_before);
    }

    #[test]
    fn fit_serializes_with_kind_tag() {
        let fit = fit_power_law(&power_law_points(6.9, 1.1), &PowerLawOptions::default()).unwrap();
        let json = serde_json::to_string(&fit).unwrap();
        assert!(json.contains("\"kind\":\"power-law\""));
        let back: CollapseFit = serde_json::from_str(&json).unwrap();
        assert_eq!(back, fit);
    }

    #[test]
    fn fidelity_example_near_two() {
        let r = chi_from_fidelity(0.95, 12, 8, 6.9, 1.1).unwrap();
        assert!((r.chi - 2.2).abs() < 0.05, "{}", r.chi);
        assert!((r.global_fidelity - 0.95f64.powi(12)).abs() < 1e-15);
        // f = 1: the x where the power law reaches 1.
        let one = chi_from_fidelity(1.0, 12, 8, 6.9, 1.1).unwrap();
        assert!((one.ln_chi_per_n - 6.9f64.powf(-1.0 / 1.1)).abs() < 1e-15);
        assert!(chi_from_fidelity(0.9, 1, 8, 0.0, 1.0).is_err());
        assert!(chi_from_fidelity(0.9, 1, 8, 1.0, -1.0).is_err());
    }

    #[test]
    fn exact_rows_collapse_to_one_and_invert_to_exact_chi() {
        let mut rows = Vec::new();
        for n in [8usize, 10, 12] {
            let exact = -1.3 * n as f64;
            for k in 1..=n / 2 {
                let chi = 1usize << k;
                let x = (chi as f64).ln() / n as f64;
                rows.push(row(n, chi, exact * (2.0 * x / 2f64.ln()).min(1.0), exact));
            }
        }
        let pts = collapse_cost(&table(rows)).unwrap();
        for p in pts.iter().filter(|p| p.chi == exact_chi(p.n)) {
            assert_eq!(p.y, 1.0);
            assert!((p.x - 2f64.ln() / 2.0).abs() < 1e-15);
        }
        for n in [8, 20] {
            let inv = invert_scaling(&pts, 1.0, n, DEFAULT_INVERSION_BINS).unwrap();
            assert!((inv.x_target - 2f64.ln() / 2.0).abs() < 1e-12);
            assert!((inv.chi_estimate - 2f64.powf(n as f64 / 2.0)).abs() < 1e-6 * inv.chi_estimate);
        }
    }

    #[test]
    fn ratio_and_cmin_collapse() {
        let mut r = row(2, 2, -1.0, -1.0);
        r.cmin = Some(MeanValue { mean: -1.0, stderr: 0.0, count: 1 });
        assert_eq!(approximation_ratio(&table(vec![r.clone()])).unwrap(), vec![(2, 1.0)]);
        let mut q = row(8, 16, -4.0, -4.0);
        q.cmin = Some(MeanValue { mean: -5.0, stderr: 0.0, count: 1 });
        let pts = collapse_vs_cmin(&table(vec![q])).unwrap();
        assert!((pts[0].y - 0.8).abs() < 1e-15);
        assert!(matches!(approximation_ratio(&table(vec![row(8, 16, -4.0, -4.0)])), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn product_rows_have_zero_entropy() {
        let mut r = row(8, 1, -1.0, -2.0);
        r.entropy = Some(MeanValue { mean: 0.0, stderr: 0.0, count: 3 });
        let pts = collapse_entropy(&table(vec![r])).unwrap();
        assert_eq!((pts[0].x, pts[0].y), (0.0, 0.0));
        assert!(collapse_entropy(&table(vec![row(8, 2, -1.0, -2.0)])).is_err());
    }
}

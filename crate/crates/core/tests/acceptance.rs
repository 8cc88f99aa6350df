//! Acceptance suite: one PASS/FAIL line per criterion at its pinned tolerance.
//!
//! Runs the full cubic p = 1 ensemble (50 instances per size, N = 8..16), so
//! expect tens of minutes on one core. Environment:
//!
//! * `QAOA_MPS_ACCEPTANCE_CACHE=path`: reuse (or write) the ensemble records.
//! * `QAOA_MPS_ACCEPTANCE_ONLY=1,4,7`: run a subset of criteria.
//! * `QAOA_MPS_ACCEPTANCE_STRICT=1`: exit non-zero when any criterion fails.
//!
//! Without `STRICT` a failing criterion is reported but does not fail the
//! test run; an internal error (a criterion that cannot be evaluated) always does.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::process::ExitCode;
use std::time::Instant;

use qaoa_mps::analysis::*;
use qaoa_mps::graph::{brute_force_solve, enumerate_cubic_graphs, gen_random_regular, BitString, Graph, GraphFamily};
use qaoa_mps::mps::exact_chi;
use qaoa_mps::optimize::*;
use qaoa_mps::oracle::{sv_cost_expectation, sv_run_qaoa};
use qaoa_mps::qaoa::*;
use qaoa_mps::seed::{derive_seed, rng_from_seed, tag_hash};
use rand::Rng;

type Res<T> = Result<T, String>;

const ROOT_SEED: u64 = 20_240_901;
const INSTANCES: usize = 50;
const SIZES: [usize; 5] = [8, 10, 12, 14, 16];
const CHIS: [usize; 6] = [2, 4, 8, 16, 32, 64];

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(checks: &[(bool, String)]) -> Verdict {
    Verdict {
        pass: checks.iter().all(|c| c.0),
        detail: checks.iter().map(|(ok, d)| format!("{}{d}", if *ok { "" } else { "!" })).collect::<Vec<_>>().join("; "),
    }
}

fn within(name: &str, value: f64, target: f64, tol: f64) -> (bool, String) {
    ((value - target).abs() <= tol, format!("{name} = {value:.4} (want {target} +- {tol})"))
}

fn instance_seed(n: usize, i: usize) -> u64 {
    derive_seed(ROOT_SEED, &[tag_hash("regular3"), n as u64, i as u64])
}

fn random_angles(seed: u64, p: usize) -> QaoaAngles {
    let mut rng = rng_from_seed(seed);
    let g = (0..p).map(|_| rng.random::<f64>() * 2.0 * PI).collect();
    let b = (0..p).map(|_| rng.random::<f64>() * PI).collect();
    QaoaAngles::new(g, b).expect("p >= 1")
}

fn criterion_1() -> Res<Verdict> {
    let mut worst_cost: f64 = 0.0;
    let mut worst_amp: f64 = 0.0;
    for k in 0..20 {
        let n = [6, 8, 10][k % 3];
        let p = 1 + k % 2;
        let g = gen_random_regular(n, 3, derive_seed(ROOT_SEED, &[1, k as u64])).map_err(err)?;
        let angles = random_angles(derive_seed(ROOT_SEED, &[2, k as u64]), p);
        let sv = sv_run_qaoa(&g, &angles).map_err(err)?;
        let cfg = CircuitConfig::new(exact_chi(n)).with_ordering_seed(k as u64);
        let fin = final_cost_and_state(&g, &angles, &cfg).map_err(err)?;
        worst_cost = worst_cost.max((fin.cost - sv_cost_expectation(&sv, &g).map_err(err)?).abs());
        for idx in 0..1usize << n {
            let s = BitString::from_index(idx, n);
            worst_amp = worst_amp.max((fin.state.amplitude(&s).map_err(err)? - sv.amplitude(&s)).norm());
        }
    }
    Ok(verdict(&[
        (worst_cost <= 1e-10, format!("max |cost diff| = {worst_cost:.2e} (want <= 1e-10)")),
        (worst_amp <= 1e-10, format!("max |amplitude diff| = {worst_amp:.2e} (want <= 1e-10)")),
    ]))
}

fn criterion_2() -> Res<Verdict> {
    let g = Graph::new(2, vec![(0, 1, 1.0)], GraphFamily::Explicit).map_err(err)?;
    let opts = OptimizerOptions { restarts: 20, seed: ROOT_SEED, ..OptimizerOptions::default() };
    let run = multistart_optimize(&g, 1, &CircuitConfig::new(2), &opts).map_err(err)?;
    let (gm, b) = (run.angles.gammas()[0], run.angles.betas()[0]);
    // The optimum orbit is where sin(2 beta) sin(gamma) = -1.
    let orbit = (2.0 * b).sin() * gm.sin() + 1.0;
    Ok(verdict(&[
        within("best cost", run.final_eval.cost, -1.0, 1e-6),
        (orbit.abs() <= 1e-6, format!("sin(2b) sin(g) + 1 = {orbit:.1e} at (g, b) = ({gm:.4}, {b:.4})")),
    ]))
}

fn criterion_3() -> Res<Verdict> {
    let graphs = enumerate_cubic_graphs(8).map_err(err)?;
    let opts = SingleLayerOptions { grid_points: 200, refine: 4, tol: 1e-9 };
    let mut found = Vec::new();
    let mut grid_gap: f64 = 0.0;
    for g in &graphs {
        let opt = exact_single_layer_optimum(g, &opts).map_err(err)?;
        // Dense 2-D grid over the full period as an independent route.
        let grid = landscape_scan(g, &uniform_grid(0.0, 2.0 * PI, 96), &uniform_grid(0.0, PI, 96), &CircuitConfig::new(16))
            .map_err(err)?;
        let grid_min = grid.iter().flatten().copied().fold(f64::INFINITY, f64::min);
        grid_gap = grid_gap.max(grid_min - opt.objective);
        if grid_min < opt.objective - 1e-9 {
            return Err(format!("grid minimum {grid_min} below the refined optimum {}", opt.objective));
        }
        found.push(opt.objective);
    }
    found.sort_by(f64::total_cmp);
    let mut want = vec![-3.484, -4.612, -4.005, -4.285, -4.612];
    want.sort_by(f64::total_cmp);
    let worst = found.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let avg = found.iter().sum::<f64>() / found.len() as f64;
    let shown: Vec<String> = found.iter().map(|v| format!("{v:.3}")).collect();
    Ok(verdict(&[
        (graphs.len() == 5, format!("{} classes (want 5)", graphs.len())),
        (found.len() == 5 && worst <= 0.01, format!("minima [{}], max deviation {worst:.4} (want <= 0.01)", shown.join(", "))),
        within("average", avg, -4.200, 0.01),
        (grid_gap >= 0.0, format!("96x96 grid sits {grid_gap:.1e} above")),
    ]))
}

fn chis_for(n: usize) -> Vec<usize> {
    let exact = exact_chi(n);
    let mut v: Vec<usize> = CHIS.iter().copied().filter(|&c| c < exact).collect();
    v.push(exact);
    v
}

fn ensemble_key() -> String {
    format!("{} root={ROOT_SEED} instances={INSTANCES} sizes={SIZES:?} chis={CHIS:?} p=1 single-layer", qaoa_mps::TOOL_VERSION)
}

/// Records of the cubic p = 1 ensemble with `p_min`, mid-cut entropy and `C_min`.
fn cubic_ensemble() -> Res<Vec<RunRecord>> {
    let key = ensemble_key();
    let cache = std::env::var("QAOA_MPS_ACCEPTANCE_CACHE").ok();
    if let Some(path) = &cache {
        if let Ok(text) = fs::read_to_string(path) {
            if text.lines().next() == Some(&serde_json::json!({ "meta": key }).to_string()) {
                eprintln!("acceptance: ensemble read from {path}");
                return parse_run_jsonl(&text).map_err(err);
            }
        }
    }
    let opts = SingleLayerOptions::default();
    let mut records = Vec::new();
    for &n in &SIZES {
        let t = Instant::now();
        let chis = chis_for(n);
        for i in 0..INSTANCES {
            let seed = instance_seed(n, i);
            let g = gen_random_regular(n, 3, seed).map_err(err)?;
            let bf = brute_force_solve(&g).map_err(err)?;
            let id = format!("regular3-n{n}-{i:04}");
            let runs = single_layer_sweep(&g, &chis, &CircuitConfig::new(1), &opts).map_err(err)?;
            for (&chi, run) in chis.iter().zip(&runs) {
                let mut rec = run.record(&id, &g, &CircuitConfig::new(chi), seed);
                rec.pmin = Some(pmin_of_state(&run.final_eval.state, &bf.minimizers).map_err(err)?);
                rec.entropy = Some(run.final_eval.state.entanglement_entropy(n / 2).map_err(err)?);
                rec.c_min = Some(bf.c_min);
                records.push(rec);
            }
        }
        eprintln!("acceptance: N={n} ensemble in {:.1} s", t.elapsed().as_secs_f64());
    }
    if let Some(path) = &cache {
        let mut text = serde_json::json!({ "meta": key }).to_string();
        text.push('\n');
        for r in &records {
            text.push_str(&r.to_json_line());
            text.push('\n');
        }
        fs::write(path, text).map_err(err)?;
    }
    Ok(records)
}

fn sizes_in(table: &EnsembleTable, lo: usize, hi: usize) -> EnsembleTable {
    table.filter(|r| r.n >= lo && r.n <= hi)
}

fn curve(points: &[CollapsePoint], raw_x: bool) -> Vec<CurvePoint> {
    points
        .iter()
        .map(|p| CurvePoint { n: p.n, x: if raw_x { (p.chi as f64).ln() } else { p.x }, y: p.y })
        .collect()
}

fn scatter_ratio(points: &[CollapsePoint]) -> Res<(f64, f64)> {
    let collapsed = relative_scatter(&curve(points, false)).map_err(err)?;
    let raw = relative_scatter(&curve(points, true)).map_err(err)?;
    Ok((collapsed, raw))
}

fn criterion_4(table: &EnsembleTable) -> Res<Verdict> {
    let sub = sizes_in(table, 10, 16);
    let min_inst = sub.rows.iter().map(|r| r.n_instances).min().unwrap_or(0);
    let points: Vec<CollapsePoint> = collapse_cost(&sub).map_err(err)?.into_iter().filter(|p| p.chi <= 64).collect();
    let (collapsed, raw) = scatter_ratio(&points)?;
    let fit = fit_power_law(&collapse_cost(table).map_err(err)?, &PowerLawOptions::default()).map_err(err)?;
    let FitKind::PowerLaw { a, alpha } = fit.kind else { return Err("unexpected fit kind".into()) };
    Ok(verdict(&[
        (min_inst >= 50, format!("{min_inst} instances per cell")),
        (raw >= 3.0 * collapsed, format!("scatter {collapsed:.4} collapsed vs {raw:.4} raw (ratio {:.2}, want >= 3)", raw / collapsed)),
        within("alpha", alpha, 1.10, 0.15),
        within("A", a, 6.9, 1.5),
        (true, format!("{} fit points", fit.n_points)),
    ]))
}

fn criterion_5(table: &EnsembleTable) -> Res<Verdict> {
    let fit = fit_extrapolation(&sizes_in(table, 8, 16)).map_err(err)?;
    let FitKind::Extrapolation { c0, c1 } = fit.kind else { return Err("unexpected fit kind".into()) };
    Ok(verdict(&[within("c0", c0, -0.385, 0.02), (true, format!("c1 = {c1:.4}"))]))
}

fn criterion_6(table: &EnsembleTable) -> Res<Verdict> {
    let points = collapse_cost(table).map_err(err)?;
    let inv = invert_scaling(&points, 0.37, 8, DEFAULT_INVERSION_BINS).map_err(err)?;
    Ok(verdict(&[(
        (1.5..=3.0).contains(&inv.chi_estimate),
        format!("chi = {:.3} at x = {:.4} (want in [1.5, 3])", inv.chi_estimate, inv.x_target),
    )]))
}

fn criterion_7(table: &EnsembleTable) -> Res<Verdict> {
    let sub = sizes_in(table, 8, 14);
    let min_inst = sub.rows.iter().map(|r| r.n_instances).min().unwrap_or(0);
    let c = collapse_pmin(&sub, &PminCollapseOptions::default()).map_err(err)?;
    let FitKind::PminCollapse { omega, lambda, d, delta } = c.fit.kind else { return Err("unexpected fit kind".into()) };
    Ok(verdict(&[
        (min_inst >= 50, format!("{min_inst} instances per cell")),
        within("Lambda", lambda, 5.0, 1.5),
        within("Omega", omega, 3.3, 1.0),
        within("D", d, 1.9, 0.6),
        within("delta", delta, 1.6, 0.4),
        (true, format!("log scatter {:.4} -> {:.4}", c.scatter_before, c.scatter_after)),
    ]))
}

fn criterion_8(table: &EnsembleTable, records: &[RunRecord]) -> Res<Verdict> {
    let mut worst_bound = f64::NEG_INFINITY;
    for r in records.iter().filter(|r| r.is_ok()) {
        let s = r.entropy.ok_or("record without entropy")?;
        let cap = (r.chi as f64).ln().min((r.n / 2) as f64 * 2f64.ln());
        worst_bound = worst_bound.max(s - cap);
    }
    // Before saturation: at least two doublings below the exact bond dimension.
    let mut slopes = Vec::new();
    for n in [10, 12, 14, 16] {
        let rows: Vec<&EnsembleRow> = table.rows.iter().filter(|r| r.n == n && 4 * r.chi <= exact_chi(n)).collect();
        let x: Vec<f64> = rows.iter().map(|r| (r.chi as f64).ln()).collect();
        let y: Vec<f64> = rows.iter().map(|r| r.entropy.map(|e| e.mean).unwrap_or(f64::NAN)).collect();
        let fit = weighted_linear_fit(&x, &y, &vec![1.0; x.len()], false).map_err(err)?;
        slopes.push((n, fit.slope));
    }
    let points = collapse_entropy(&sizes_in(table, 10, 16)).map_err(err)?;
    let (collapsed, raw) = scatter_ratio(&points)?;
    let mut checks: Vec<(bool, String)> =
        slopes.iter().map(|&(n, s)| ((s - 1.0).abs() <= 0.15, format!("N={n} slope {s:.3}"))).collect();
    checks.push((raw >= 3.0 * collapsed, format!("S/N scatter {collapsed:.4} collapsed vs {raw:.4} raw (want ratio >= 3)")));
    checks.push((worst_bound <= 1e-12, format!("max S - min(ln chi, N/2 ln 2) = {worst_bound:.1e}")));
    Ok(verdict(&checks))
}

fn criterion_9() -> Res<Verdict> {
    const FLAT_INSTANCES: usize = 50;
    let opts = SingleLayerOptions::default();
    let mut records = Vec::new();
    for n in [12usize, 16, 20, 24] {
        for i in 0..FLAT_INSTANCES {
            let seed = derive_seed(ROOT_SEED, &[tag_hash("flatness"), n as u64, i as u64]);
            let g = gen_random_regular(n, 3, seed).map_err(err)?;
            for chi in [2, 4, 8] {
                let cfg = CircuitConfig::new(chi).with_method(Method::RoutedPerGate);
                let run = single_layer_optimize(&g, &cfg, &opts).map_err(err)?;
                records.push(run.record(&format!("flat-{n}-{i}"), &g, &cfg, seed));
            }
        }
    }
    let table = build_ensemble(&records, Some(&BTreeMap::new())).map_err(err)?;
    let flat = flatness_check(&table, 4).map_err(err)?;
    let mut checks = vec![(
        flat.slope.abs() < 2.0 * flat.stderr,
        format!("slope {:.4} +- {:.4} per site (want |slope| < 2 stderr)", flat.slope, flat.stderr),
    )];
    for n in table.sizes() {
        let c: Vec<f64> = [2, 4, 8].iter().filter_map(|&chi| table.row(n, chi).map(|r| r.mean_cost)).collect();
        let decreasing = c.len() == 3 && c[0] > c[1] && c[1] > c[2];
        checks.push((decreasing, format!("N={n} C(2,4,8) = {:.3}, {:.3}, {:.3}", c[0], c[1], c[2])));
    }
    Ok(verdict(&checks))
}

/// Cells within `rel` of the grid minimum.
fn argmin_cells(grid: &[Vec<f64>], rel: f64) -> Vec<(usize, usize)> {
    let min = grid.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    let tol = rel * min.abs().max(1.0);
    let mut out = Vec::new();
    for (i, row) in grid.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if v <= min + tol {
                out.push((i, j));
            }
        }
    }
    out
}

/// Chebyshev distance on the periodic grid.
fn cell_distance(a: (usize, usize), b: (usize, usize), size: usize) -> usize {
    let d = |x: usize, y: usize| {
        let d = x.abs_diff(y);
        d.min(size - d)
    };
    d(a.0, b.0).max(d(a.1, b.1))
}

fn criterion_10() -> Res<Verdict> {
    const SIZE: usize = 64;
    let gammas = uniform_grid(0.0, 2.0 * PI, SIZE);
    let betas = uniform_grid(0.0, PI, SIZE);
    let mut checks = Vec::new();
    for (k, g) in enumerate_cubic_graphs(8).map_err(err)?.iter().enumerate() {
        let lo = landscape_scan(g, &gammas, &betas, &CircuitConfig::new(2)).map_err(err)?;
        let hi = landscape_scan(g, &gammas, &betas, &CircuitConfig::new(16)).map_err(err)?;
        let (alo, ahi) = (argmin_cells(&lo, 1e-9), argmin_cells(&hi, 1e-9));
        // Symmetric copies of the optimum are all global minima; take the closest pair.
        let dist = alo.iter().flat_map(|&a| ahi.iter().map(move |&b| cell_distance(a, b, SIZE))).min().unwrap_or(usize::MAX);
        let min_lo = lo[alo[0].0][alo[0].1];
        let min_hi = hi[ahi[0].0][ahi[0].1];
        checks.push((dist <= 2 && min_lo > min_hi, format!("graph {k}: shift {dist} cells, minima {min_lo:.3} vs {min_hi:.3}")));
    }
    Ok(verdict(&checks))
}

fn main() -> ExitCode {
    let only: Option<Vec<u32>> = std::env::var("QAOA_MPS_ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let strict = std::env::var("QAOA_MPS_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let wanted = |k: u32| only.as_ref().is_none_or(|o| o.contains(&k));

    let mut ensemble: Option<Res<(Vec<RunRecord>, EnsembleTable)>> = None;
    let mut get_ensemble = || -> Res<(Vec<RunRecord>, EnsembleTable)> {
        ensemble
            .get_or_insert_with(|| {
                let records = cubic_ensemble()?;
                let table = build_ensemble(&records, None).map_err(err)?;
                Ok((records, table))
            })
            .clone()
    };

    let names = [
        "oracle equivalence at chi_exact",
        "single-edge multistart optimum",
        "cubic N=8 p=1 exact minima",
        "cost collapse and power law",
        "exact-cost extrapolation",
        "hardness inversion at Y=0.37, N=8",
        "p_min collapse",
        "entanglement entropy",
        "fixed-chi flatness (routed per gate)",
        "landscape contrast chi=2 vs chi=16",
    ];
    let (mut failed, mut broken) = (0, 0);
    for (k, name) in (1u32..).zip(names) {
        if !wanted(k) {
            continue;
        }
        let t = Instant::now();
        let result = match k {
            1 => criterion_1(),
            2 => criterion_2(),
            3 => criterion_3(),
            9 => criterion_9(),
            10 => criterion_10(),
            _ => get_ensemble().and_then(|(records, table)| match k {
                4 => criterion_4(&table),
                5 => criterion_5(&table),
                6 => criterion_6(&table),
                7 => criterion_7(&table),
                _ => criterion_8(&table, &records),
            }),
        };
        let secs = t.elapsed().as_secs_f64();
        match result {
            Ok(v) => {
                failed += usize::from(!v.pass);
                println!("{} {k:>2} {name}: {} [{secs:.1} s]", if v.pass { "PASS" } else { "FAIL" }, v.detail);
            }
            Err(e) => {
                broken += 1;
                println!("FAIL {k:>2} {name}: could not evaluate: {e} [{secs:.1} s]");
            }
        }
    }
    if wanted(11) {
        println!("SKIP 11 full-scale ensembles, N=300 regime, hardware numbers: out of desk scale; see tests/properties.rs");
    }
    println!("acceptance: {failed} failed, {broken} not evaluated");
    if broken > 0 || (strict && failed > 0) {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;
use serde_json::{json, Value};

use qaoa_mps::analysis::*;
use qaoa_mps::optimize::{parse_run_jsonl, RunRecord};

use crate::{csv_float, digest_files, read_text, write_output, CliError, CliResult, Meta};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Collapse,
    PowerFit,
    Extrapolate,
    Invert,
    PminCollapse,
    EntropyCollapse,
    Flatness,
    Ratio,
}

impl Mode {
    pub const ALL: [Mode; 8] = [
        Mode::Collapse,
        Mode::PowerFit,
        Mode::Extrapolate,
        Mode::Invert,
        Mode::PminCollapse,
        Mode::EntropyCollapse,
        Mode::Flatness,
        Mode::Ratio,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Mode::Collapse => "collapse",
            Mode::PowerFit => "power-fit",
            Mode::Extrapolate => "extrapolate",
            Mode::Invert => "invert",
            Mode::PminCollapse => "pmin-collapse",
            Mode::EntropyCollapse => "entropy-collapse",
            Mode::Flatness => "flatness",
            Mode::Ratio => "ratio",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Mode::ALL
            .into_iter()
            .find(|m| m.tag() == s)
            .ok_or_else(|| format!("unknown mode '{s}'; expected one of {}", Mode::ALL.map(|m| m.tag()).join(", ")))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalyzeConfig {
    pub runs: Vec<PathBuf>,
    pub mode: Mode,
    pub x_max: f64,
    pub exclude_n: Vec<usize>,
    pub weighted: bool,
    /// Target `C / C_exact` for `invert`.
    pub fidelity: Option<f64>,
    /// System size for `invert`.
    pub n: Option<usize>,
    pub bins: usize,
    /// Bond dimension for `flatness`.
    pub chi: Option<usize>,
    /// Per-gate fidelity and gate count: `invert` also reports the matching
    /// bond dimension through the fitted power law.
    pub gate_fidelity: Option<f64>,
    pub gates: Option<usize>,
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

impl AnalyzeConfig {
    pub fn new(runs: Vec<PathBuf>, mode: Mode) -> Self {
        let pl = PowerLawOptions::default();
        AnalyzeConfig {
            runs,
            mode,
            x_max: pl.x_max,
            exclude_n: pl.exclude_n,
            weighted: pl.weighted,
            fidelity: None,
            n: None,
            bins: DEFAULT_INVERSION_BINS,
            chi: None,
            gate_fidelity: None,
            gates: None,
            out: None,
        }
    }

    fn power_law(&self) -> PowerLawOptions {
        PowerLawOptions { x_max: self.x_max, exclude_n: self.exclude_n.clone(), weighted: self.weighted }
    }
}

/// Report body: CSV text (with `# ...` preamble lines) or a JSON value.
#[derive(Debug, Clone, PartialEq)]
pub enum Report {
    Csv { flags: Vec<String>, summary: Vec<(String, f64)>, header: &'static str, rows: Vec<String> },
    Json(Value),
}

fn points_rows(points: &[CollapsePoint]) -> Vec<String> {
    points
        .iter()
        .map(|p| format!("{},{},{},{},{}", p.n, p.chi, csv_float(p.x), csv_float(p.y), csv_float(p.weight)))
        .collect()
}

/// Scatter of the points around each other's interpolants, in the collapsed
/// variable `ln chi / N` and in the raw `ln chi`.
fn scatter_pair(points: &[CollapsePoint]) -> Result<(f64, f64), qaoa_mps::Error> {
    let collapsed: Vec<CurvePoint> = points.iter().map(|p| CurvePoint { n: p.n, x: p.x, y: p.y }).collect();
    let raw: Vec<CurvePoint> = points.iter().map(|p| CurvePoint { n: p.n, x: (p.chi as f64).ln(), y: p.y }).collect();
    Ok((relative_scatter(&collapsed)?, relative_scatter(&raw)?))
}

fn curve_report(points: Vec<CollapsePoint>) -> Report {
    let mut flags = Vec::new();
    let mut summary = Vec::new();
    match scatter_pair(&points) {
        Ok((collapsed, raw)) => {
            summary.push(("scatter_collapsed".to_string(), collapsed));
            summary.push(("scatter_uncollapsed".to_string(), raw));
        }
        Err(e) => flags.push(match e {
            qaoa_mps::Error::InsufficientData(m) => m,
            other => other.to_string(),
        }),
    }
    Report::Csv { flags, summary, header: "n,chi,x,y,weight", rows: points_rows(&points) }
}

pub fn analyze(records: &[RunRecord], cfg: &AnalyzeConfig) -> CliResult<Report> {
    let table = build_ensemble(records, None)?;
    Ok(match cfg.mode {
        Mode::Collapse => curve_report(collapse_cost(&table)?),
        Mode::EntropyCollapse => curve_report(collapse_entropy(&table)?),
        Mode::PowerFit => {
            let fit = fit_power_law(&collapse_cost(&table)?, &cfg.power_law())?;
            Report::Json(json!({ "fit": fit }))
        }
        Mode::Extrapolate => Report::Json(json!({ "fit": fit_extrapolation(&table)? })),
        Mode::Invert => {
            let y = cfg.fidelity.ok_or_else(|| CliError::Config("invert needs --fidelity".into()))?;
            let n = cfg.n.ok_or_else(|| CliError::Config("invert needs --n".into()))?;
            let points = collapse_cost(&table)?;
            let inv = invert_scaling(&points, y, n, cfg.bins)?;
            let mut out = json!({ "target": y, "n": n, "bins": cfg.bins, "inversion": inv });
            match (cfg.gate_fidelity, cfg.gates) {
                (Some(f), Some(k)) => {
                    let fit = fit_power_law(&points, &cfg.power_law())?;
                    let FitKind::PowerLaw { a, alpha } = fit.kind else {
                        return Err(CliError::Failure("power-law fit returned another kind".into()));
                    };
                    out["power_law"] = json!(fit);
                    out["gate_fidelity"] = json!(chi_from_fidelity(f, k, n, a, alpha)?);
                }
                (None, None) => {}
                _ => return Err(CliError::Config("--gate-fidelity and --gates go together".into())),
            }
            Report::Json(out)
        }
        Mode::PminCollapse => Report::Json(json!({ "collapse": collapse_pmin(&table, &PminCollapseOptions::default())? })),
        Mode::Flatness => {
            let chis: Vec<usize> = match cfg.chi {
                Some(c) => vec![c],
                None => table.chis(),
            };
            let mut checks = Vec::new();
            let mut skipped = Vec::new();
            for chi in chis {
                match flatness_check(&table, chi) {
                    Ok(f) => checks.push(f),
                    Err(qaoa_mps::Error::InsufficientData(m)) if cfg.chi.is_none() => skipped.push(m),
                    Err(e) => return Err(e.into()),
                }
            }
            let rows: Vec<Value> = table
                .rows
                .iter()
                .map(|r| json!({ "n": r.n, "chi": r.chi, "mean_cost": r.mean_cost, "stderr": r.stderr, "instances": r.n_instances }))
                .collect();
            Report::Json(json!({ "checks": checks, "skipped": skipped, "rows": rows }))
        }
        Mode::Ratio => {
            let ratios: Vec<Value> =
                approximation_ratio(&table)?.into_iter().map(|(n, r)| json!({ "n": n, "ratio": r })).collect();
            let points = collapse_vs_cmin(&table)?;
            let scatter = scatter_pair(&points).ok().map(|(c, r)| json!({ "collapsed": c, "uncollapsed": r }));
            Report::Json(json!({ "ratios": ratios, "cmin_collapse": points, "scatter": scatter }))
        }
    })
}

pub fn render<C: Serialize>(meta: &Meta<C>, report: &Report) -> String {
    match report {
        Report::Csv { flags, summary, header, rows } => {
            let mut out = meta.csv_lines();
            for f in flags {
                out.push_str(&format!("# flag: {f}\n"));
            }
            for (k, v) in summary {
                out.push_str(&format!("# {k} = {}\n", csv_float(*v)));
            }
            out.push_str(header);
            out.push('\n');
            for r in rows {
                out.push_str(r);
                out.push('\n');
            }
            out
        }
        Report::Json(v) => {
            let doc = json!({ "meta": meta, "result": v });
            let mut s = serde_json::to_string_pretty(&doc).expect("reports always serialize");
            s.push('\n');
            s
        }
    }
}

pub fn cmd_analyze(cfg: &AnalyzeConfig) -> CliResult<()> {
    if cfg.runs.is_empty() {
        return Err(CliError::Config("--runs needs at least one file".into()));
    }
    if cfg.bins == 0 {
        return Err(CliError::Config("--bins must be at least 1".into()));
    }
    let mut records = Vec::new();
    for p in &cfg.runs {
        records.extend(parse_run_jsonl(&read_text(p)?).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?);
    }
    let report = analyze(&records, cfg)?;
    let mut meta = Meta::new("analyze", cfg);
    meta.input_digest = Some(digest_files(&cfg.runs)?);
    let mut cadences: Vec<&str> = records.iter().filter_map(|r| r.cadence.as_deref()).collect();
    cadences.sort_unstable();
    cadences.dedup();
    meta.cadence = Some(cadences.join("+"));
    let mut modes: Vec<&str> = records.iter().filter_map(|r| r.normalize_mode.as_deref()).collect();
    modes.sort_unstable();
    modes.dedup();
    meta.normalize_mode = Some(modes.join("+"));
    write_output(cfg.out.as_deref(), &render(&meta, &report))
}

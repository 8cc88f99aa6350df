use std::f64::consts::PI;
use std::path::PathBuf;

use serde::Serialize;

use qaoa_mps::graph::{parse_graph_jsonl, GraphRecord};
use qaoa_mps::qaoa::{landscape_scan, uniform_grid, CircuitConfig, Method, NormalizeMode};

use crate::{digest_files, read_text, sig12, write_output, CliError, CliResult, Meta};

#[derive(Debug, Clone, Serialize)]
pub struct LandscapeConfig {
    pub graphs: PathBuf,
    /// Graph id; the first record when absent.
    pub id: Option<String>,
    pub chi: usize,
    pub gamma_points: usize,
    pub beta_points: usize,
    pub gamma_max: f64,
    pub beta_max: f64,
    pub method: Method,
    pub ordering_seed: u64,
    pub normalize_mode: NormalizeMode,
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

impl LandscapeConfig {
    pub fn new(graphs: PathBuf, chi: usize) -> Self {
        LandscapeConfig {
            graphs,
            id: None,
            chi,
            gamma_points: 64,
            beta_points: 64,
            gamma_max: 2.0 * PI,
            beta_max: PI,
            method: Method::MpoPerLayer,
            ordering_seed: 0,
            normalize_mode: NormalizeMode::FinalOnly,
            out: None,
        }
    }
}

/// Gamma axis, beta axis and cost rows indexed by gamma.
pub type Scan = (Vec<f64>, Vec<f64>, Vec<Vec<f64>>);

/// Grid over `[0, gamma_max) x [0, beta_max)`; rows of the result follow gamma.
pub fn scan(rec: &GraphRecord, cfg: &LandscapeConfig) -> CliResult<Scan> {
    if cfg.chi == 0 || cfg.gamma_points == 0 || cfg.beta_points == 0 {
        return Err(CliError::Config("--chi and the grid sizes must be at least 1".into()));
    }
    let gammas = uniform_grid(0.0, cfg.gamma_max, cfg.gamma_points);
    let betas = uniform_grid(0.0, cfg.beta_max, cfg.beta_points);
    let circuit = CircuitConfig::new(cfg.chi)
        .with_method(cfg.method)
        .with_ordering_seed(cfg.ordering_seed)
        .with_normalize_mode(cfg.normalize_mode);
    let values = landscape_scan(&rec.to_graph()?, &gammas, &betas, &circuit)?;
    Ok((gammas, betas, values))
}

pub fn cmd_landscape(cfg: &LandscapeConfig) -> CliResult<()> {
    let graphs = parse_graph_jsonl(&read_text(&cfg.graphs)?)?;
    let rec = match &cfg.id {
        Some(id) => graphs.iter().find(|g| &g.id == id).ok_or_else(|| CliError::Config(format!("no graph with id '{id}'")))?,
        None => graphs.first().ok_or_else(|| CliError::Config(format!("{} holds no graphs", cfg.graphs.display())))?,
    };
    let (gammas, betas, values) = scan(rec, cfg)?;
    let mut meta = Meta::new("landscape", cfg);
    meta.cadence = Some(cfg.method.cadence().to_string());
    meta.normalize_mode = Some(cfg.normalize_mode.tag().to_string());
    meta.input_digest = Some(digest_files(std::slice::from_ref(&cfg.graphs))?);
    meta.notes.push(format!("graph {}", rec.id));
    let mut text = meta.csv_lines();
    text.push_str("gamma,beta,cost\n");
    for (gm, row) in gammas.iter().zip(&values) {
        for (b, c) in betas.iter().zip(row) {
            // Folds -0.0 into 0.0.
            let c = if *c == 0.0 { 0.0 } else { *c };
            text.push_str(&format!("{},{},{}\n", sig12(*gm), sig12(*b), sig12(c)));
        }
    }
    write_output(cfg.out.as_deref(), &text)
}

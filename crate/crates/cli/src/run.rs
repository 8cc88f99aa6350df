use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;

use qaoa_mps::graph::{brute_force_solve_capped, BruteForceResult, Graph, GraphRecord, DEFAULT_ENUMERATION_CAP};
use qaoa_mps::graph::parse_graph_jsonl;
use qaoa_mps::optimize::{
    multistart_optimize, single_layer_sweep, OptimizedRun, OptimizerKind, OptimizerOptions, RunRecord, SingleLayerOptions,
};
use qaoa_mps::qaoa::{pmin_of_state, CircuitConfig, Method, NormalizeMode};
use qaoa_mps::seed::{derive_seed, tag_hash};

use crate::{digest_files, pool, read_text, write_output, CliError, CliResult, Meta};

/// Sweep over (graphs x chi_list) at one depth.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub graphs: PathBuf,
    pub chi_list: Vec<usize>,
    pub p: usize,
    pub restarts: usize,
    pub method: Method,
    pub ordering_seed: u64,
    pub normalize_mode: NormalizeMode,
    pub optimizer: OptimizerKind,
    pub grid_points: usize,
    pub max_iterations: usize,
    pub root_seed: u64,
    pub pmin: bool,
    pub entropy: bool,
    pub cmin: bool,
    /// Largest `N` solved by brute force for `p_min` and `C_min`.
    pub enumeration_cap: usize,
    #[serde(skip)]
    pub jobs: usize,
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(graphs: PathBuf, chi_list: Vec<usize>) -> Self {
        ExperimentConfig {
            graphs,
            chi_list,
            p: 1,
            restarts: 20,
            method: Method::MpoPerLayer,
            ordering_seed: 0,
            normalize_mode: NormalizeMode::FinalOnly,
            optimizer: OptimizerKind::Multistart,
            grid_points: SingleLayerOptions::default().grid_points,
            max_iterations: OptimizerOptions::default().max_iterations,
            root_seed: 0,
            pmin: false,
            entropy: false,
            cmin: false,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
            jobs: 1,
            out: None,
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.chi_list.is_empty() {
            return Err(CliError::Config("--chi needs at least one bond dimension".into()));
        }
        if self.chi_list.contains(&0) {
            return Err(CliError::Config("bond dimensions must be at least 1".into()));
        }
        if self.p == 0 {
            return Err(CliError::Config("--p must be at least 1".into()));
        }
        match self.optimizer {
            OptimizerKind::Multistart if self.restarts == 0 => {
                Err(CliError::Config("--restarts must be at least 1".into()))
            }
            OptimizerKind::SingleLayer if self.p != 1 => {
                Err(CliError::Config("the single-layer optimizer needs --p 1".into()))
            }
            OptimizerKind::SingleLayer if self.grid_points < 3 => {
                Err(CliError::Config("--grid-points must be at least 3".into()))
            }
            _ => Ok(()),
        }
    }

    fn circuit(&self, chi: usize) -> CircuitConfig {
        CircuitConfig::new(chi)
            .with_method(self.method)
            .with_ordering_seed(self.ordering_seed)
            .with_normalize_mode(self.normalize_mode)
    }

    pub fn cell_seed(&self, graph_id: &str, chi: usize) -> u64 {
        derive_seed(self.root_seed, &[tag_hash(graph_id), chi as u64])
    }
}

fn annotate(
    rec: &mut RunRecord,
    run: &OptimizedRun,
    cfg: &ExperimentConfig,
    solved: Option<&BruteForceResult>,
) -> Result<(), String> {
    if let Some(bf) = solved {
        if cfg.pmin {
            rec.pmin = Some(pmin_of_state(&run.final_eval.state, &bf.minimizers).map_err(|e| e.to_string())?);
        }
        if cfg.cmin {
            rec.c_min = Some(bf.c_min);
        }
    }
    if cfg.entropy {
        let st = &run.final_eval.state;
        let cut = st.n_sites() / 2;
        if cut >= 1 {
            rec.entropy = Some(st.entanglement_entropy(cut).map_err(|e| e.to_string())?);
        }
    }
    Ok(())
}

/// All records of one graph, in `chi_list` order. Failures become records.
fn run_graph(rec: &GraphRecord, g: &Graph, cfg: &ExperimentConfig) -> Vec<RunRecord> {
    let failed_all = |msg: String| -> Vec<RunRecord> {
        cfg.chi_list
            .iter()
            .map(|&chi| RunRecord::failed(&rec.id, g, cfg.p, &cfg.circuit(chi), cfg.cell_seed(&rec.id, chi), msg.clone()))
            .collect()
    };
    let solved = if cfg.pmin || cfg.cmin {
        match brute_force_solve_capped(g, cfg.enumeration_cap) {
            Ok(bf) => Some(bf),
            Err(e) => return failed_all(e.to_string()),
        }
    } else {
        None
    };
    let runs: Vec<Result<OptimizedRun, String>> = match cfg.optimizer {
        OptimizerKind::SingleLayer => {
            let opts = SingleLayerOptions { grid_points: cfg.grid_points, ..SingleLayerOptions::default() };
            match single_layer_sweep(g, &cfg.chi_list, &cfg.circuit(1), &opts) {
                Ok(runs) => runs.into_iter().map(Ok).collect(),
                Err(e) => return failed_all(e.to_string()),
            }
        }
        OptimizerKind::Multistart => cfg
            .chi_list
            .iter()
            .map(|&chi| {
                let opts = OptimizerOptions {
                    restarts: cfg.restarts,
                    seed: cfg.cell_seed(&rec.id, chi),
                    max_iterations: cfg.max_iterations,
                    ..OptimizerOptions::default()
                };
                multistart_optimize(g, cfg.p, &cfg.circuit(chi), &opts).map_err(|e| e.to_string())
            })
            .collect(),
    };
    cfg.chi_list
        .iter()
        .zip(runs)
        .map(|(&chi, run)| {
            let ccfg = cfg.circuit(chi);
            let seed = cfg.cell_seed(&rec.id, chi);
            match run {
                Ok(run) => {
                    let mut out = run.record(&rec.id, g, &ccfg, seed);
                    match annotate(&mut out, &run, cfg, solved.as_ref()) {
                        Ok(()) => out,
                        Err(e) => RunRecord::failed(&rec.id, g, cfg.p, &ccfg, seed, e),
                    }
                }
                Err(e) => RunRecord::failed(&rec.id, g, cfg.p, &ccfg, seed, e),
            }
        })
        .collect()
}

/// Runs the sweep on up to `cfg.jobs` workers and returns the records in
/// (graph file order, chi_list order).
pub fn sweep(graphs: &[GraphRecord], cfg: &ExperimentConfig) -> CliResult<Vec<RunRecord>> {
    cfg.validate()?;
    let built = graphs
        .iter()
        .map(|r| r.to_graph().map_err(|e| CliError::Config(format!("graph {}: {e}", r.id))))
        .collect::<CliResult<Vec<Graph>>>()?;
    let per_graph: Vec<Vec<RunRecord>> = pool(cfg.jobs)?
        .install(|| graphs.par_iter().zip(&built).map(|(r, g)| run_graph(r, g, cfg)).collect());
    Ok(per_graph.into_iter().flatten().collect())
}

pub fn cmd_run(cfg: &ExperimentConfig) -> CliResult<()> {
    cfg.validate()?;
    let graphs = parse_graph_jsonl(&read_text(&cfg.graphs)?)?;
    if graphs.is_empty() {
        return Err(CliError::Config(format!("{} holds no graphs", cfg.graphs.display())));
    }
    let records = sweep(&graphs, cfg)?;
    let mut meta = Meta::new("run", cfg);
    meta.root_seed = Some(cfg.root_seed);
    meta.cadence = Some(cfg.method.cadence().to_string());
    meta.normalize_mode = Some(cfg.normalize_mode.tag().to_string());
    meta.input_digest = Some(digest_files(std::slice::from_ref(&cfg.graphs))?);
    let mut text = meta.jsonl_line();
    text.push('\n');
    for r in &records {
        text.push_str(&r.to_json_line());
        text.push('\n');
    }
    write_output(cfg.out.as_deref(), &text)?;
    let failed = records.iter().filter(|r| !r.is_ok()).count();
    if failed > 0 {
        return Err(CliError::Partial { failed, total: records.len() });
    }
    Ok(())
}

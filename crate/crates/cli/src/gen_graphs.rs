use std::path::PathBuf;

use serde::Serialize;

use qaoa_mps::graph::{enumerate_cubic_graphs, gen_random_complete, gen_random_regular, GraphFamily, GraphRecord};
use qaoa_mps::seed::{derive_seed, tag_hash};

use crate::{write_output, CliError, CliResult, Meta};

#[derive(Debug, Clone, Serialize)]
pub struct GenConfig {
    pub family: GraphFamily,
    pub n_list: Vec<usize>,
    pub instances_per_n: usize,
    pub root_seed: u64,
    /// Every isomorphism class of connected cubic graphs instead of samples.
    pub enumerate: bool,
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

/// Seed of instance `index` of size `n`: `hash(root, family, n, index)`.
pub fn instance_seed(root: u64, family: GraphFamily, n: usize, index: usize) -> u64 {
    derive_seed(root, &[tag_hash(family.tag()), n as u64, index as u64])
}

pub fn instance_id(family: GraphFamily, n: usize, index: usize) -> String {
    format!("{}-n{n}-{index:04}", family.tag())
}

pub fn generate(cfg: &GenConfig) -> CliResult<Vec<GraphRecord>> {
    if cfg.n_list.is_empty() {
        return Err(CliError::Config("--n needs at least one size".into()));
    }
    if !cfg.enumerate && cfg.instances_per_n == 0 {
        return Err(CliError::Config("--count must be at least 1".into()));
    }
    let mut out = Vec::new();
    for &n in &cfg.n_list {
        if cfg.enumerate {
            if cfg.family != GraphFamily::Regular3Unit {
                return Err(CliError::Config("--enumerate is only defined for the regular3 family".into()));
            }
            for (i, g) in enumerate_cubic_graphs(n)?.iter().enumerate() {
                out.push(GraphRecord::from_graph(instance_id(cfg.family, n, i), 0, g));
            }
            continue;
        }
        for i in 0..cfg.instances_per_n {
            let seed = instance_seed(cfg.root_seed, cfg.family, n, i);
            let g = match cfg.family {
                GraphFamily::Regular3Unit => gen_random_regular(n, 3, seed)?,
                GraphFamily::CompleteUniform => gen_random_complete(n, seed)?,
                GraphFamily::Explicit => {
                    return Err(CliError::Config("explicit graphs are read from files, not generated".into()))
                }
            };
            out.push(GraphRecord::from_graph(instance_id(cfg.family, n, i), seed, &g));
        }
    }
    Ok(out)
}

pub fn cmd_gen_graphs(cfg: &GenConfig) -> CliResult<()> {
    let records = generate(cfg)?;
    let mut meta = Meta::new("gen-graphs", cfg);
    meta.root_seed = Some(cfg.root_seed);
    if cfg.family == GraphFamily::Regular3Unit && !cfg.enumerate {
        meta.notes.push("disconnected samples are kept".into());
    }
    let mut text = meta.jsonl_line();
    text.push('\n');
    for r in &records {
        text.push_str(&r.to_json_line());
        text.push('\n');
    }
    write_output(cfg.out.as_deref(), &text)
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qaoa_mps::graph::{GraphFamily, DEFAULT_ENUMERATION_CAP};
use qaoa_mps::optimize::OptimizerKind;
use qaoa_mps::qaoa::{Method, NormalizeMode};
use qaoa_mps_cli::analyze::{cmd_analyze, AnalyzeConfig, Mode};
use qaoa_mps_cli::gen_graphs::{cmd_gen_graphs, GenConfig};
use qaoa_mps_cli::landscape::{cmd_landscape, LandscapeConfig};
use qaoa_mps_cli::run::{cmd_run, ExperimentConfig};
use qaoa_mps_cli::CliResult;

#[derive(Parser)]
#[command(name = "qaoa-mps", version, about = "MPS simulation of QAOA Max-Cut and bond-dimension scaling analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded graph ensemble as JSONL.
    GenGraphs(GenArgs),
    /// Optimize every (graph, chi) cell and write run records as JSONL.
    Run(RunArgs),
    /// Aggregate run records into collapse curves and fits.
    Analyze(AnalyzeArgs),
    /// Scan the depth-one cost landscape of one graph as CSV.
    Landscape(LandscapeArgs),
}

#[derive(Args)]
struct Common {
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value = "regular3")]
    family: GraphFamily,
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Emit every connected cubic graph on each size instead of samples.
    #[arg(long)]
    enumerate: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    graphs: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    chi: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    p: usize,
    #[arg(long, default_value_t = 20)]
    restarts: usize,
    #[arg(long, default_value = "mpo-per-layer")]
    method: Method,
    #[arg(long, default_value_t = 0)]
    ordering_seed: u64,
    #[arg(long, default_value = "final-only")]
    normalize_mode: NormalizeMode,
    #[arg(long, default_value = "multistart")]
    optimizer: OptimizerKind,
    /// Gamma grid of the single-layer optimizer.
    #[arg(long)]
    grid_points: Option<usize>,
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Record the probability of the optimal cuts.
    #[arg(long)]
    pmin: bool,
    /// Record the mid-chain entanglement entropy.
    #[arg(long)]
    entropy: bool,
    /// Record the true minimum cost.
    #[arg(long)]
    cmin: bool,
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    enumeration_cap: usize,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long, required = true, num_args = 1..)]
    runs: Vec<PathBuf>,
    #[arg(long)]
    mode: Mode,
    #[arg(long)]
    x_max: Option<f64>,
    /// Sizes left out of the power-law fit.
    #[arg(long, value_delimiter = ',')]
    exclude_n: Option<Vec<usize>>,
    #[arg(long)]
    unweighted: bool,
    #[arg(long)]
    fidelity: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long)]
    chi: Option<usize>,
    #[arg(long)]
    gate_fidelity: Option<f64>,
    #[arg(long)]
    gates: Option<usize>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct LandscapeArgs {
    #[arg(long)]
    graphs: PathBuf,
    #[arg(long)]
    id: Option<String>,
    #[arg(long)]
    chi: usize,
    #[arg(long, default_value_t = 64)]
    gamma_points: usize,
    #[arg(long, default_value_t = 64)]
    beta_points: usize,
    #[arg(long)]
    gamma_max: Option<f64>,
    #[arg(long)]
    beta_max: Option<f64>,
    #[arg(long, default_value = "mpo-per-layer")]
    method: Method,
    #[arg(long, default_value_t = 0)]
    ordering_seed: u64,
    #[arg(long, default_value = "final-only")]
    normalize_mode: NormalizeMode,
    #[command(flatten)]
    common: Common,
}

fn dispatch(cmd: Command) -> CliResult<()> {
    match cmd {
        Command::GenGraphs(a) => cmd_gen_graphs(&GenConfig {
            family: a.family,
            n_list: a.n,
            instances_per_n: a.count,
            root_seed: a.seed,
            enumerate: a.enumerate,
            out: a.common.out,
        }),
        Command::Run(a) => {
            let mut cfg = ExperimentConfig::new(a.graphs, a.chi);
            cfg.p = a.p;
            cfg.restarts = a.restarts;
            cfg.method = a.method;
            cfg.ordering_seed = a.ordering_seed;
            cfg.normalize_mode = a.normalize_mode;
            cfg.optimizer = a.optimizer;
            if let Some(g) = a.grid_points {
                cfg.grid_points = g;
            }
            if let Some(m) = a.max_iterations {
                cfg.max_iterations = m;
            }
            cfg.pmin = a.pmin;
            cfg.entropy = a.entropy;
            cfg.cmin = a.cmin;
            cfg.enumeration_cap = a.enumeration_cap;
            cfg.jobs = a.jobs;
            cfg.root_seed = a.seed;
            cfg.out = a.common.out;
            cmd_run(&cfg)
        }
        Command::Analyze(a) => {
            let mut cfg = AnalyzeConfig::new(a.runs, a.mode);
            if let Some(x) = a.x_max {
                cfg.x_max = x;
            }
            if let Some(e) = a.exclude_n {
                cfg.exclude_n = e;
            }
            cfg.weighted = !a.unweighted;
            cfg.fidelity = a.fidelity;
            cfg.n = a.n;
            if let Some(b) = a.bins {
                cfg.bins = b;
            }
            cfg.chi = a.chi;
            cfg.gate_fidelity = a.gate_fidelity;
            cfg.gates = a.gates;
            cfg.out = a.common.out;
            cmd_analyze(&cfg)
        }
        Command::Landscape(a) => {
            let mut cfg = LandscapeConfig::new(a.graphs, a.chi);
            cfg.id = a.id;
            cfg.gamma_points = a.gamma_points;
            cfg.beta_points = a.beta_points;
            if let Some(g) = a.gamma_max {
                cfg.gamma_max = g;
            }
            if let Some(b) = a.beta_max {
                cfg.beta_max = b;
            }
            cfg.method = a.method;
            cfg.ordering_seed = a.ordering_seed;
            cfg.normalize_mode = a.normalize_mode;
            cfg.out = a.common.out;
            cmd_landscape(&cfg)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qaoa-mps: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

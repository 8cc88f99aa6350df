//! Experiment harness behind the `qaoa-mps` binary: ensemble generation,
//! sweeps, analyses and landscapes. Every output starts with a metadata
//! header (a `{"meta": ...}` line in JSONL, `# meta ...` lines in CSV, a
//! `meta` key in JSON reports) so a file alone says how it was made.

pub mod analyze;
pub mod gen_graphs;
pub mod landscape;
pub mod run;

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use qaoa_mps::TOOL_VERSION;

pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INVALID_CONFIG: i32 = 2;
pub const EXIT_PARTIAL_FAILURE: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or unreadable inputs.
    Config(String),
    /// The sweep finished but some cells carry an `error` field.
    Partial { failed: usize, total: usize },
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_INVALID_CONFIG,
            CliError::Partial { .. } => EXIT_PARTIAL_FAILURE,
            CliError::Failure(_) => EXIT_FAILURE,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "invalid configuration: {m}"),
            CliError::Partial { failed, total } => write!(f, "{failed} of {total} cells failed; see their error fields"),
            CliError::Failure(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<qaoa_mps::Error> for CliError {
    fn from(e: qaoa_mps::Error) -> Self {
        match e {
            qaoa_mps::Error::InvalidArgument(_) | qaoa_mps::Error::Parse(_) => CliError::Config(e.to_string()),
            other => CliError::Failure(other.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Header written at the top of every output.
#[derive(Debug, Clone, Serialize)]
pub struct Meta<C: Serialize> {
    pub tool: &'static str,
    pub command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub root_seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cadence: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normalize_mode: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input_digest: Option<String>,
    pub config: C,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl<C: Serialize> Meta<C> {
    pub fn new(command: &'static str, config: C) -> Self {
        Meta { tool: TOOL_VERSION, command, root_seed: None, cadence: None, normalize_mode: None, input_digest: None, config, notes: Vec::new() }
    }

    pub fn json(&self) -> String {
        serde_json::to_string(self).expect("metadata always serializes")
    }

    pub fn jsonl_line(&self) -> String {
        format!("{{\"meta\":{}}}", self.json())
    }

    pub fn csv_lines(&self) -> String {
        let mut out = format!("# meta {}\n", self.json());
        for n in &self.notes {
            out.push_str(&format!("# note: {n}\n"));
        }
        out
    }
}

/// SHA-256 over the input files in order, hex encoded.
pub fn digest_files(paths: &[PathBuf]) -> CliResult<String> {
    let mut h = Sha256::new();
    for p in paths {
        h.update(read_bytes(p)?);
    }
    Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

fn read_bytes(p: &Path) -> CliResult<Vec<u8>> {
    fs::read(p).map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))
}

pub fn read_text(p: &Path) -> CliResult<String> {
    fs::read_to_string(p).map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))
}

/// Writes to `out`, or stdout when it is `None`.
pub fn write_output(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| CliError::Failure(format!("cannot create {}: {e}", dir.display())))?;
            }
            fs::write(p, text).map_err(|e| CliError::Failure(format!("cannot write {}: {e}", p.display())))
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|e| CliError::Failure(format!("cannot write to stdout: {e}")))
        }
    }
}

/// Thread pool of `jobs` workers (0 picks the available parallelism).
pub fn pool(jobs: usize) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Failure(format!("cannot start worker pool: {e}")))
}

/// Shortest round-trip rendering of a float for CSV cells.
pub fn csv_float(x: f64) -> String {
    format!("{x:?}")
}

/// Twelve significant digits.
pub fn sig12(x: f64) -> String {
    format!("{x:.11e}")
}

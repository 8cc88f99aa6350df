//! Bond-dimension-limited matrix-product-state simulation of QAOA Max-Cut
//! circuits, and the finite-size scaling analysis of its approximation quality.
//!
//! The crate is organised bottom-up:
//!
//! * [`graph`]: problem instances, brute-force solutions, cubic-graph enumeration.
//! * [`oracle`]: dense state-vector simulation, the ground truth for small `N`.
//! * [`mps`]: the MPS engine with truncated two-site updates and a diagonal MPO.
//! * [`qaoa`]: circuits, objective, `p_min` and landscape scans.
//! * [`optimize`]: BFGS, multistart and the exact single-layer angle search.
//! * [`analysis`]: ensemble tables, collapses and every fitted relation.

pub mod analysis;
pub mod error;
pub mod graph;
pub mod mps;
pub mod optimize;
pub mod oracle;
pub mod qaoa;
pub mod seed;

pub use error::{Error, Result};

pub use num_complex::Complex64 as C64;

/// Version string embedded in every output file.
pub const TOOL_VERSION: &str = concat!("qaoa-mps ", env!("CARGO_PKG_VERSION"));

/// True for the `{"meta": ...}` header lines that JSONL writers emit first.
pub fn is_meta_line(line: &str) -> bool {
    let t = line.trim_start();
    t.starts_with("{\"meta\"")
        || (t.starts_with('{')
            && serde_json::from_str::<serde_json::Value>(t)
                .ok()
                .and_then(|v| v.as_object().map(|o| o.len() == 1 && o.contains_key("meta")))
                .unwrap_or(false))
}

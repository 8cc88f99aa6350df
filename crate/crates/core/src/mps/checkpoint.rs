//! JSON checkpoints of an [`MpsState`], for debugging only.
//!
//! ```json
//! {"magic": "qaoa-mps-checkpoint/v1", "n": 2, "chi_max": 2, "ordering": [0, 1],
//!  "norm": 1.0, "tensors": [{"left": 1, "right": 1, "data": [re, im, re, im]}, ...]}
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

use super::state::MpsState;
use super::tensor::SiteTensor;

pub const CHECKPOINT_MAGIC: &str = "qaoa-mps-checkpoint/v1";

/// Largest tensor buffer a checkpoint may declare, in complex entries.
const MAX_ENTRIES: usize = 1 << 26;

#[derive(Debug, Serialize, Deserialize)]
struct TensorRecord {
    left: usize,
    right: usize,
    data: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Checkpoint {
    magic: String,
    n: usize,
    chi_max: usize,
    ordering: Vec<usize>,
    norm: f64,
    tensors: Vec<TensorRecord>,
}

pub fn to_checkpoint_json(state: &MpsState) -> String {
    let cp = Checkpoint {
        magic: CHECKPOINT_MAGIC.to_string(),
        n: state.n_sites(),
        chi_max: state.chi_max(),
        ordering: state.ordering().to_vec(),
        norm: state.norm_tracked(),
        tensors: state
            .tensors()
            .iter()
            .map(|t| TensorRecord {
                left: t.left_dim(),
                right: t.right_dim(),
                data: t.data().iter().flat_map(|c| [c.re, c.im]).collect(),
            })
            .collect(),
    };
    serde_json::to_string(&cp).expect("checkpoints always serialize")
}

/// Parses and validates a checkpoint. Malformed input is an error, never a panic.
pub fn from_checkpoint_json(text: &str) -> Result<MpsState> {
    let cp: Checkpoint = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    if cp.magic != CHECKPOINT_MAGIC {
        return Err(Error::Parse(format!("unknown checkpoint magic '{}'", cp.magic)));
    }
    if cp.n == 0 || cp.tensors.len() != cp.n {
        return Err(Error::Parse(format!("expected {} tensors, found {}", cp.n, cp.tensors.len())));
    }
    let mut tensors = Vec::with_capacity(cp.n);
    for (k, t) in cp.tensors.into_iter().enumerate() {
        let entries = t
            .left
            .checked_mul(t.right)
            .and_then(|x| x.checked_mul(2))
            .filter(|&x| x > 0 && x <= MAX_ENTRIES)
            .ok_or_else(|| Error::Parse(format!("tensor {k} has unsupported shape {}x2x{}", t.left, t.right)))?;
        if t.data.len() != 2 * entries {
            return Err(Error::Parse(format!(
                "tensor {k} holds {} reals, shape needs {}",
                t.data.len(),
                2 * entries
            )));
        }
        if t.data.iter().any(|x| !x.is_finite()) {
            return Err(Error::Parse(format!("tensor {k} has non-finite entries")));
        }
        let data = t.data.chunks_exact(2).map(|p| C64::new(p[0], p[1])).collect();
        tensors.push(SiteTensor::new(t.left, t.right, data));
    }
    MpsState::from_tensors(tensors, cp.ordering, cp.chi_max).map_err(|e| Error::Parse(e.to_string()))
}

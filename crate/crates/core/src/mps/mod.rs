//! Matrix-product-state engine.
//!
//! States are chains of rank-3 tensors `A[l, s, r]` with a bond-dimension cap
//! `chi_max`. Two-site updates split by SVD and keep the largest `chi_max`
//! singular values; dropped weight is not renormalized away, so the squared
//! norm decays with truncation and is tracked in the state.

pub mod checkpoint;
pub mod gate;
pub(crate) mod linalg;
pub mod mpo;
pub mod state;
pub mod tensor;

pub use checkpoint::{from_checkpoint_json, to_checkpoint_json, CHECKPOINT_MAGIC};
pub use gate::GateMatrix;
pub use mpo::{DiagonalMpo, DEFAULT_MPO_BOND_CAP, MPO_COMPRESSION_TOL};
pub use state::{exact_chi, validate_ordering, MpsState, TruncationReport, SCHMIDT_CUTOFF};
pub use tensor::SiteTensor;

pub fn identity_ordering(n: usize) -> Vec<usize> {
    (0..n).collect()
}

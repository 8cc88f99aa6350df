//! Stable seed derivation.
//!
//! Every random draw in the crate is keyed by a seed derived from a root seed
//! and a short path of integers (family tag, size, instance index, restart
//! index, ...). The mixing function is SplitMix64, which is fixed here so that
//! outputs stay identical across platforms and crate versions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from `root` and a path of integers.
pub fn derive_seed(root: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(root), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// FNV-1a hash of a tag, used to fold strings into seed paths.
pub fn tag_hash(tag: &str) -> u64 {
    tag.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

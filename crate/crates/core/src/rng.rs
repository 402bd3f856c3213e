//! Deterministic seed derivation.
//!
//! Every random quantity in the crate flows from a single root seed through a
//! named substream, so a whole run is reproducible from one integer. Substreams
//! are identified by a label (`"plan"`, `"data"`, ...) plus an index (replicate
//! number, subsample batch, ...).

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf29ce484222325;
const FNV_PRIME: u64 = 0x100000001b3;

fn fnv1a(bytes: &[u8], mut hash: u64) -> u64 {
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

/// Derives a child seed from `(root, label, index)` with FNV-1a.
pub fn derive_seed(root: u64, label: &str, index: u64) -> u64 {
    let mut h = fnv1a(&root.to_le_bytes(), FNV_OFFSET);
    h = fnv1a(label.as_bytes(), h);
    fnv1a(&index.to_le_bytes(), h)
}

/// A ChaCha generator seeded from the named substream.
pub fn substream(root: u64, label: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(root, label, index))
}

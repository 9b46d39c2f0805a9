//! Deterministic seed splitting.
//!
//! Every random stream in the crate is a `ChaCha8Rng` seeded from
//! `derive(master, path)`. The split function is SplitMix64 applied to the
//! master seed and each path label in turn, so a replication's stream depends
//! only on `(master, labels)` and never on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 increment (2^64 / golden ratio).
pub const SPLIT_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Stream labels used by the simulators.
pub mod stream {
    pub const POLICY: u64 = 1;
    pub const ENVIRONMENT: u64 = 2;
    pub const ARRIVAL: u64 = 3;
    pub const INSTANCE: u64 = 4;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(SPLIT_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a master seed and a path of labels.
pub fn derive(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(master), |acc, &label| splitmix64(acc ^ splitmix64(label)))
}

/// RNG for the stream at `path` under `master`.
pub fn rng(master: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(master, path))
}

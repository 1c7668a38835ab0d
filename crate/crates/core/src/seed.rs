//! Seed derivation for reproducible Monte-Carlo runs.
//!
//! Every stochastic routine takes an explicit `u64` seed and builds its own
//! generator. Trials derive child seeds from a parent seed and a trial index
//! so that any trial can be replayed on its own.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finaliser.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for stream `index` of `parent`.
pub fn child_seed(parent: u64, index: u64) -> u64 {
    mix(mix(parent) ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

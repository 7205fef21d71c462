//! Seed derivation for independent, reproducible random streams.
//!
//! Every random decision in a campaign draws from a ChaCha stream whose seed
//! is a pure function of a tuple of integers (master seed, round, role, game
//! index, ...). Streams never share state, so games can be simulated in any
//! order or in parallel and still produce identical logs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a sequence of integers into a single 64-bit seed.
pub fn derive_seed(parts: &[u64]) -> u64 {
    parts.iter().fold(GOLDEN, |acc, &p| mix(acc.wrapping_add(GOLDEN) ^ mix(p.wrapping_add(GOLDEN))))
}

pub fn stream(parts: &[u64]) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(parts))
}

/// Stable numeric tag for a string label, for use inside `derive_seed`.
pub fn label(tag: &str) -> u64 {
    tag.bytes().fold(0xCBF2_9CE4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01B3))
}

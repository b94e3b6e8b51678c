//! Seeded randomness.
//!
//! Every randomized step (initialisation, negative sampling, shuffles) draws
//! from SplitMix64, a generator with 64 bits of state whose output sequence is
//! fixed by its published algorithm, so runs reproduce across platforms.
//! Independent streams are derived by mixing a base seed with a stream tag.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_xoshiro::SplitMix64;

pub type SeededRng = SplitMix64;

pub fn seeded(seed: u64) -> SeededRng {
    SplitMix64::seed_from_u64(seed)
}

/// Deterministic seed for a named sub-stream of `seed`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    // One SplitMix64 finalisation round over the combined value.
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn shuffle<T>(items: &mut [T], seed: u64) {
    items.shuffle(&mut seeded(seed));
}

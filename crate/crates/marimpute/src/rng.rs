//! Seed derivation for independent, reproducible random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Mixes a list of seed words into a single stream seed.
pub fn derive_seed(words: &[u64]) -> u64 {
    let mut acc = 0x243f6a8885a308d3u64;
    for &w in words {
        acc = splitmix64(acc ^ w);
    }
    acc
}

/// Deterministic RNG keyed by the given seed words.
pub fn rng_from(words: &[u64]) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(derive_seed(words))
}

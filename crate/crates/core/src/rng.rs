//! Seed derivation and the RNG used throughout the crate.
//!
//! Every stochastic component draws from a [`ChaCha8Rng`] seeded through
//! [`derive_seed`], so a run is a pure function of its master seed and the
//! stream labels along the way. ChaCha streams are identical across
//! platforms, which is what makes rasters and datasets bit-reproducible.

pub use rand_chacha::ChaCha8Rng;

use rand::SeedableRng;

/// Mix a base seed with a label and an index into a new 64-bit seed.
///
/// SplitMix64-style finalizer over the concatenated inputs; collisions
/// between distinct (label, index) pairs are not a concern at this scale.
pub fn derive_seed(base: u64, label: &str, index: u64) -> u64 {
    let mut h = base ^ 0x9e37_79b9_7f4a_7c15;
    for &b in label.as_bytes() {
        h = mix(h ^ b as u64);
    }
    mix(h ^ index)
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// RNG for a derived stream.
pub fn stream(base: u64, label: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, label, index))
}

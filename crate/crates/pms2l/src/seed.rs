//! Deterministic seed derivation.
//!
//! Every randomized routine takes an explicit 64-bit seed. Experiments need
//! many independent streams (one per trial, per stage) derived from a single
//! master seed; we derive them with a splitmix64 hash over (seed, stream tag)
//! so that streams are decorrelated and stable across platforms.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer; a solid 64-bit mixer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from a parent seed and a stream tag.
pub fn derive(seed: u64, tag: u64) -> u64 {
    mix(seed ^ mix(tag))
}

/// Derive a child seed from a parent seed and two stream tags.
pub fn derive2(seed: u64, tag_a: u64, tag_b: u64) -> u64 {
    derive(derive(seed, tag_a), tag_b)
}

/// Seeded RNG used throughout the crate.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

//! Deterministic per-trajectory random streams.
//!
//! Stream `i` of master seed `s` is a ChaCha12 generator seeded with
//! `splitmix64(splitmix64(s) ^ splitmix64(i + 0x9E37_79B9_7F4A_7C15))`.
//! Trajectories therefore never share state and can run in any order.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

pub type StreamRng = ChaCha12Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of stream `index` under master seed `seed`.
pub fn stream_seed(seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ splitmix64(index.wrapping_add(0x9E37_79B9_7F4A_7C15)))
}

pub fn stream_rng(seed: u64, index: u64) -> StreamRng {
    StreamRng::seed_from_u64(stream_seed(seed, index))
}

/// Standard normal sample.
#[inline]
pub fn normal(rng: &mut StreamRng) -> f64 {
    StandardNormal.sample(rng)
}

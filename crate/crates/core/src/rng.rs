//! Seeded random streams.
//!
//! Every stochastic component in the crate draws from a `ChaCha8Rng` seeded
//! explicitly, so identical seeds give bitwise-identical results on every
//! platform. Replication seeds are derived as `base_seed XOR splitmix64(i)`;
//! this derivation is part of the output contract and must not change.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type RunRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> RunRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer; decorrelates consecutive replication indices.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of replication `index` under `base_seed`.
pub fn replication_seed(base_seed: u64, index: u64) -> u64 {
    base_seed ^ splitmix64(index)
}

/// A standard normal draw.
pub fn normal(rng: &mut RunRng) -> f64 {
    rng.sample(StandardNormal)
}

/// A vector of i.i.d. standard normal draws.
pub fn normal_vec(rng: &mut RunRng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| normal(rng)).collect()
}

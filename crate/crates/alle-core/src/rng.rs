//! Deterministic random streams.
//!
//! Every stochastic component derives its generator from a master seed and a
//! fixed list of counters (domain tag, tree index, grid cell, ...). Streams are
//! therefore independent of scheduling order: a worker pool of any size
//! produces the same numbers as a sequential run.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Domain tags keep unrelated streams apart even when their counters collide.
pub mod domain {
    pub const NOISE: u64 = 1;
    pub const TREE: u64 = 2;
    pub const PERMUTE: u64 = 3;
    pub const SPLIT: u64 = 4;
    pub const CELL: u64 = 5;
    pub const INIT: u64 = 6;
    pub const SWEEP: u64 = 7;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a seed with a sequence of counters into a single 64-bit key.
pub fn mix(seed: u64, words: &[u64]) -> u64 {
    let mut acc = splitmix64(seed);
    for &w in words {
        acc = splitmix64(acc ^ w);
    }
    acc
}

/// A counter-derived generator: same (seed, words) always yields the same stream.
pub fn stream(seed: u64, words: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(seed, words))
}

/// Uniform draw in the open interval (0, 1).
fn unit_open(rng: &mut impl RngCore) -> f64 {
    (((rng.next_u64() >> 11) as f64) + 0.5) / 9_007_199_254_740_992.0
}

/// Uniform draw in the half-open interval [0, 1).
pub fn uniform(rng: &mut impl RngCore) -> f64 {
    ((rng.next_u64() >> 11) as f64) / 9_007_199_254_740_992.0
}

/// Standard normal deviate via the Box-Muller transform.
///
/// Consumes exactly two 64-bit draws per call, so the stream position does not
/// depend on the values produced.
pub fn standard_normal(rng: &mut impl RngCore) -> f64 {
    let u1 = unit_open(rng);
    let u2 = unit_open(rng);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Uniform integer in `[0, n)`.
pub fn index(rng: &mut impl RngCore, n: usize) -> usize {
    debug_assert!(n > 0);
    // Multiply-shift rejection-free mapping is fine here: n is tiny relative
    // to 2^64, so the bias is far below anything observable.
    ((rng.next_u64() as u128 * n as u128) >> 64) as usize
}

/// In-place Fisher-Yates shuffle.
pub fn shuffle<T>(rng: &mut impl RngCore, items: &mut [T]) {
    for i in (1..items.len()).rev() {
        let j = index(rng, i + 1);
        items.swap(i, j);
    }
}

/// `n` bootstrap indices drawn with replacement from `[0, n)`.
pub fn bootstrap_indices(rng: &mut impl RngCore, n: usize) -> Vec<usize> {
    (0..n).map(|_| index(rng, n)).collect()
}

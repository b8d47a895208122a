//! Seeded random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 generator keyed by a
//! user seed and a named stream, so independent consumers never share state.

use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type SeededRng = ChaCha8Rng;

/// Named stream identifiers.
pub mod stream {
    pub const INIT: u64 = 1;
    pub const PREDICT: u64 = 2;
    pub const DATA: u64 = 3;
    pub const SPLIT: u64 = 4;
    pub const RANK: u64 = 5;
    pub const PROPOSALS: u64 = 6;
    pub const GMM: u64 = 7;
    pub const TRANSFORM: u64 = 8;
    pub const GEOMETRY: u64 = 9;
    /// Epoch `e` uses stream `EPOCH_BASE + e`.
    pub const EPOCH_BASE: u64 = 1 << 32;
}

pub fn seeded(seed: u64, stream: u64) -> SeededRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

pub fn normal_vec<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<f64> {
    (0..len).map(|_| standard_normal(rng)).collect()
}

//! Seeded, splittable random streams.
//!
//! Every consumer derives its generator from `(seed, purpose, index)`, so a
//! batch, a reconstruction chunk or a parameter initialisation maps to the
//! same stream no matter which thread or in which order it runs.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Stream purposes. Distinct values keep unrelated consumers of one seed apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    State = 1,
    Init = 2,
    Batch = 3,
    Noise = 4,
    Reconstruct = 5,
    NoiseFloor = 6,
    Draw = 7,
}

pub fn stream(seed: u64, purpose: Purpose, index: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    // 2^56 indices per purpose
    rng.set_stream(((purpose as u64) << 56) | (index & ((1 << 56) - 1)));
    rng
}

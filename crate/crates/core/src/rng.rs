//! Seeded, reproducible random streams.
//!
//! Verification runs must be replayable: every sampled measurement draws
//! from a ChaCha stream derived from (base seed, case index, shot index), so
//! runs can be partitioned across workers without coordinating generator
//! state.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator seeded directly from a 64-bit value.
pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream for one (case, shot) pair under a base seed.
pub fn shot_rng(seed: u64, case: u64, shot: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(derive(case, shot));
    rng
}

/// Stream id for a (case, shot) pair; stays collision-free for any case and
/// shot counts used here (cases < 2^20, shots < 2^44).
pub fn derive(case: u64, shot: u64) -> u64 {
    (case << 44) ^ shot
}

//! Seeded random streams.
//!
//! Every random draw in a simulation run comes from a ChaCha8 stream keyed by
//! the run seed and a purpose id, so changing how one component consumes
//! randomness never shifts another component's draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Prior = 1,
    Instance = 2,
    Contexts = 3,
    Rewards = 4,
    Agent = 5,
    Misspecification = 6,
    Pretrain = 7,
    Evaluation = 8,
}

pub fn stream(seed: u64, purpose: Purpose) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose as u64);
    rng
}

/// Stream for an indexed sub-purpose, e.g. one agent among several.
pub fn substream(seed: u64, purpose: Purpose, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((purpose as u64) << 32) | index);
    rng
}

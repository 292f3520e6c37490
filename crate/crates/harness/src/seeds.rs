//! Deterministic seed splitting. Each subsystem reads its own ChaCha stream
//! of the root seed, so changing how one subsystem consumes randomness
//! leaves the others untouched.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    Spawn = 1,
    Traffic = 2,
    Soc = 3,
    Renewables = 4,
    Game = 5,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedStreams {
    pub root: u64,
}

impl SeedStreams {
    pub fn new(root: u64) -> Self {
        SeedStreams { root }
    }

    /// Seed for repetition `index` of `subsystem`.
    pub fn seed(&self, subsystem: Subsystem, index: u64) -> u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.root);
        rng.set_stream(subsystem as u64);
        rng.set_word_pos(u128::from(index) * 2);
        rng.next_u64()
    }
}

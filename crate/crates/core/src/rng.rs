//! Reproducible random draws.
//!
//! Every Monte-Carlo draw gets its own counter-based substream keyed by
//! `(master_seed, draw_index)`, so draw `j` is bit-identical no matter how
//! draws are scheduled across threads. ChaCha is used as the underlying
//! counter-mode generator; its 64-bit stream id carries the draw index.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator handed to a single draw / attack repetition.
pub type DrawRng = ChaCha8Rng;

/// Factory for per-draw random substreams.
#[derive(Debug, Clone, Copy)]
pub struct SeededRng {
    master_seed: u64,
}

impl SeededRng {
    pub fn new(master_seed: u64) -> Self {
        Self { master_seed }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    /// Independent substream for draw `index`. Same `(master_seed, index)`
    /// always yields the same stream, regardless of call order or thread.
    pub fn substream(&self, index: u64) -> DrawRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(index);
        rng
    }
}

/// Mix a label into a seed (splitmix64 finalizer). Used to give unrelated
/// parts of an experiment (e.g. different noise levels) disjoint streams.
pub fn derive_seed(seed: u64, label: u64) -> u64 {
    let mut z = seed ^ label.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

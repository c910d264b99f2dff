//! Reproducible, splittable random streams.
//!
//! Every random draw in a simulation comes from a [`RngStream`] whose key is
//! derived from a master seed and a path of integer identifiers
//! (system, query, repetition, list, ...). Two streams with the same seed and
//! path always produce the same sequence, independent of the order in which
//! tasks are scheduled on worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A position in the tree of random streams rooted at a master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    master_seed: u64,
    key: u64,
    depth: u32,
}

impl RngStream {
    pub fn new(master_seed: u64) -> Self {
        Self {
            master_seed,
            key: splitmix64(master_seed),
            depth: 0,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// Derives the sub-stream identified by `id` one level below this one.
    pub fn child(&self, id: u64) -> Self {
        let salt = splitmix64(id ^ (u64::from(self.depth) + 1).wrapping_mul(GOLDEN));
        Self {
            master_seed: self.master_seed,
            key: splitmix64(self.key ^ salt.rotate_left(17)),
            depth: self.depth + 1,
        }
    }

    /// Follows a whole path of identifiers.
    pub fn path(&self, ids: &[u64]) -> Self {
        ids.iter().fold(*self, |s, &id| s.child(id))
    }

    /// Instantiates the generator for this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut seed = [0u8; 32];
        let mut state = self.key;
        for chunk in seed.chunks_exact_mut(8) {
            state = splitmix64(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        ChaCha8Rng::from_seed(seed)
    }
}

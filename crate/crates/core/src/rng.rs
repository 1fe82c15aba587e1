//! Seeded random substreams.
//!
//! A [`SeededRng`] is a node in a derivation tree. Deriving a child mixes the
//! parent seed with a purpose tag and an index through SplitMix64:
//!
//! ```text
//! child = mix(mix(parent ^ mix(tag)) ^ mix(index + GOLDEN))
//! ```
//!
//! and a node's generator is a ChaCha12 stream keyed by four successive
//! SplitMix64 outputs of its seed. The rule is fixed, so replica `b` of a run
//! sees the same numbers regardless of how many replicas exist or the order
//! in which they are evaluated.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

pub type StreamRng = ChaCha12Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// What a substream is used for. The discriminants are part of the
/// derivation rule and must not change.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Generate = 1,
    Restart = 2,
    Reference = 3,
    Replica = 4,
    ReplicaClustering = 5,
    GridCell = 6,
    GapReference = 7,
    Baseline = 8,
    Repetition = 9,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeededRng {
    seed: u64,
}

impl SeededRng {
    pub const fn new(master_seed: u64) -> Self {
        Self { seed: master_seed }
    }

    pub const fn seed(&self) -> u64 {
        self.seed
    }

    pub fn derive(&self, purpose: Purpose, index: u64) -> SeededRng {
        let tagged = mix(self.seed ^ mix(purpose as u64));
        SeededRng {
            seed: mix(tagged ^ mix(index.wrapping_add(GOLDEN))),
        }
    }

    /// A fresh generator for this node. Calling it twice yields two
    /// generators that produce the same sequence.
    pub fn stream(&self) -> StreamRng {
        let mut key = [0u8; 32];
        let mut state = self.seed;
        for chunk in key.chunks_exact_mut(8) {
            state = state.wrapping_add(GOLDEN);
            chunk.copy_from_slice(&mix(state).to_le_bytes());
        }
        ChaCha12Rng::from_seed(key)
    }
}

//! Seeded random streams.
//!
//! Every random draw in the crate comes from a [`ChaCha8Rng`] keyed by a
//! 64-bit seed and a stream id. ChaCha streams with the same key are
//! independent, so replicates can run in any order (or in parallel) and still
//! reproduce bit-for-bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSeed {
    pub seed: u64,
    #[serde(default)]
    pub stream_id: u64,
}

/// Purpose tags for derived streams. Kept in the top byte of the stream id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum StreamKind {
    Population = 1,
    Design = 2,
    Centers = 3,
}

impl RngSeed {
    pub const fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    pub fn from_seed(seed: u64) -> Self {
        Self::new(seed, 0)
    }

    /// Stream for `kind` at sweep point `point`, replicate `replicate`.
    ///
    /// Layout: `kind << 56 | point << 32 | replicate`. Points and replicates
    /// above those widths are rejected by the harness before they get here.
    pub fn derive(self, kind: StreamKind, point: u32, replicate: u32) -> Self {
        debug_assert!(point < (1 << 24));
        let stream = ((kind as u64) << 56) | ((point as u64) << 32) | replicate as u64;
        Self::new(self.seed, stream)
    }

    pub fn rng(self) -> SimRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

impl From<u64> for RngSeed {
    fn from(seed: u64) -> Self {
        Self::from_seed(seed)
    }
}

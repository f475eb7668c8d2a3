//! Deterministic random streams.
//!
//! Every random draw in the crate comes from a [`SeedSequence`]: a 64-bit key
//! that can be split into child keys by label, and turned into an independent
//! ChaCha8 stream per chain. Keys depend only on labels, never on scheduling,
//! so results are identical for any thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SeedSequence {
    key: u64,
}

impl SeedSequence {
    pub fn new(seed: u64) -> Self {
        Self {
            key: splitmix64(seed),
        }
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    /// Child sequence for `label`. Distinct labels give unrelated keys.
    pub fn derive(&self, label: u64) -> Self {
        Self {
            key: splitmix64(self.key ^ splitmix64(label.wrapping_add(0x632b_e59b_d9b4_e019))),
        }
    }

    /// Independent generator for one stream (usually a chain id).
    pub fn stream(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.key);
        rng.set_stream(stream);
        rng
    }

    /// Single generator for sequential work.
    pub fn rng(&self) -> ChaCha8Rng {
        self.stream(u64::MAX)
    }
}

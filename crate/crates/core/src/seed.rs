//! Seed plumbing. Every random stream in the crate is a ChaCha8 generator
//! keyed by an [`RngSeed`]; child streams are derived by hashing, never by
//! sharing generator state, so results do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RngSeed(pub u64);

impl RngSeed {
    /// Child seed for stream `index`, e.g. replication `b` of an experiment.
    pub fn derive(self, index: u64) -> RngSeed {
        let a = splitmix64(self.0 ^ 0x6a09_e667_f3bc_c909);
        RngSeed(splitmix64(a.wrapping_add(splitmix64(index.wrapping_add(0x9e37_79b9_7f4a_7c15)))))
    }

    /// Child seed for a named purpose (design, noise, pilot, ...).
    pub fn stream(self, label: &str) -> RngSeed {
        // FNV-1a over the label bytes.
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in label.bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        self.derive(h)
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

impl From<u64> for RngSeed {
    fn from(v: u64) -> Self {
        RngSeed(v)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

//! Deterministic randomness contract.
//!
//! Every stochastic operation takes an [`RngSpec`], a value type naming a
//! stream by (master seed, replica index). Streams are derived by hashing
//! the pair (plus an optional substream label) into a ChaCha key, so equal
//! specs give bit-identical output regardless of thread count or call order.

use rand_chacha::ChaCha12Rng;
use rand_chacha::rand_core::SeedableRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngSpec {
    pub master_seed: u64,
    pub replica_index: u64,
}

/// SplitMix64 finalizer; good avalanche for key derivation.
#[inline]
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RngSpec {
    pub fn new(master_seed: u64, replica_index: u64) -> Self {
        RngSpec {
            master_seed,
            replica_index,
        }
    }

    /// Derived spec for the i-th replica of this stream.
    pub fn replica(&self, index: u64) -> Self {
        RngSpec {
            master_seed: self.master_seed,
            replica_index: mix(self.replica_index.wrapping_add(mix(index))),
        }
    }

    /// A labeled independent substream (e.g. one per module stage).
    pub fn stream(&self, label: u64) -> ChaCha12Rng {
        let k0 = mix(self.master_seed);
        let k1 = mix(k0 ^ self.replica_index);
        let k2 = mix(k1 ^ label);
        let k3 = mix(k2 ^ 0x5155_aa55_1234_8765);
        let mut seed = [0u8; 32];
        seed[0..8].copy_from_slice(&k0.to_le_bytes());
        seed[8..16].copy_from_slice(&k1.to_le_bytes());
        seed[16..24].copy_from_slice(&k2.to_le_bytes());
        seed[24..32].copy_from_slice(&k3.to_le_bytes());
        ChaCha12Rng::from_seed(seed)
    }

    /// The default stream for this spec.
    pub fn rng(&self) -> ChaCha12Rng {
        self.stream(0)
    }
}

/// Stream labels for the stages inside composite operations, kept in one
/// place so seeds stay disjoint by construction.
pub mod labels {
    pub const CAPACITY_MC: u64 = 0x01;
    pub const EQUILIBRIUM: u64 = 0x02;
    pub const POISSON_COUNT: u64 = 0x03;
    pub const TRAJECTORY: u64 = 0x04;
    pub const LEVEL_LABEL: u64 = 0x05;
    pub const REENTRY: u64 = 0x06;
    pub const CACTUS_GENERATION: u64 = 0x10;
    pub const EMBEDDING: u64 = 0x20;
    pub const PAIR_ENERGY: u64 = 0x21;
}

//! Derivation of independent random streams from one master seed.
//!
//! A stream is identified by the module that consumes it, the fiber distance,
//! the link count, and a free-form lane. The stream seed is a SplitMix64
//! chain over `(master, module, distance bits, k, lane)`, so caching and
//! evaluation order never change which numbers a computation sees.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random stream type used throughout the crate.
pub type Stream = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Module {
    InnerLeaf,
    LinkProfile,
    Round,
}

impl Module {
    fn tag(self) -> u64 {
        match self {
            Module::InnerLeaf => 0x1,
            Module::LinkProfile => 0x2,
            Module::Round => 0x3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamKey {
    pub module: Module,
    pub distance_km: f64,
    pub k: u32,
    pub lane: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the stream `key` under `master`.
pub fn derive_seed(master: u64, key: StreamKey) -> u64 {
    [
        key.module.tag(),
        key.distance_km.to_bits(),
        u64::from(key.k),
        key.lane,
    ]
    .into_iter()
    .fold(splitmix64(master), |acc, word| splitmix64(acc ^ word))
}

pub fn stream(master: u64, key: StreamKey) -> Stream {
    Stream::seed_from_u64(derive_seed(master, key))
}

//! Deterministic random streams.
//!
//! Every consumer of randomness owns a private ChaCha stream derived from the
//! run seed and a purpose tag, so the order in which streams are consumed by
//! different subsystems never perturbs one another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type RandomStream = ChaCha8Rng;

/// Stream purposes. Values are part of the determinism contract; never reorder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    World = 1,
    Placement = 2,
    BrainBuild = 3,
    Jitter = 4,
    Replay = 5,
}

/// SplitMix64 finalizer; good avalanche for combining small integers.
pub(crate) fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stream(seed: u64, purpose: Purpose) -> RandomStream {
    RandomStream::seed_from_u64(mix(seed ^ mix(purpose as u64)))
}

/// A stream keyed additionally by an entity id (agent brains, trace jitter).
pub fn keyed_stream(seed: u64, purpose: Purpose, key: u64) -> RandomStream {
    RandomStream::seed_from_u64(mix(mix(seed ^ mix(purpose as u64)) ^ mix(key.wrapping_add(1))))
}

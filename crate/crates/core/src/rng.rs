//! Keyed pseudo-random streams.
//!
//! Every stream is addressed by `(seed, index, stream)` and the ChaCha key is
//! built from those three words directly, so a record's draws never depend
//! on which other records were generated before it or on which thread.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stream ids used by the crate. Distinct ids give independent streams for
/// the same `(seed, index)`.
pub mod streams {
    pub const RANDOM_ORDERING: u64 = 1;
    pub const RANDOM_MEASURE: u64 = 2;
    pub const REGRESSION: u64 = 10;
    pub const TRAJECTORY_SCENE: u64 = 20;
    pub const TRAJECTORY_MEMBER: u64 = 21;
    pub const TRAJECTORY_SAMPLES: u64 = 22;
    pub const TRANSLATION: u64 = 30;
}

pub fn keyed_rng(seed: u64, index: u64, stream: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&index.to_le_bytes());
    key[16..24].copy_from_slice(&stream.to_le_bytes());
    key[24..32].copy_from_slice(b"uqevalv1");
    ChaCha8Rng::from_seed(key)
}

/// 64-bit FNV-1a, used to turn string ids into stream indices.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// A uniform draw in [0, 1) determined by `seed` and a record id.
pub fn unit_uniform_for(seed: u64, id: &str) -> f64 {
    keyed_rng(seed, fnv1a(id.as_bytes()), streams::RANDOM_MEASURE).random::<f64>()
}

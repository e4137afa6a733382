//! Seed derivation for independent random streams.
//!
//! Every stream is seeded with `splitmix64(root ^ splitmix64(stream_id))`, so
//! adding a new stream never changes the values drawn by existing ones.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive(root: u64, stream: u64) -> u64 {
    splitmix64(root ^ splitmix64(stream))
}

/// Stream identifiers used across the crate.
pub mod streams {
    pub const SCENE: u64 = 1;
    pub const CORPUS: u64 = 2;
    pub const SPLIT: u64 = 3;
}

pub fn rng(root: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(root, stream))
}

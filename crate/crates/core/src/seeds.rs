//! Counter-based seed derivation.
//!
//! Every parallel task derives its generator seed from `(master, stream, index)`
//! with a SplitMix64 finalizer, so results never depend on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for task `index` of logical stream `stream` under `master`.
pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    let a = mix(master.wrapping_add(GOLDEN));
    let b = mix(a ^ stream.wrapping_mul(GOLDEN).wrapping_add(0x632B_E59B_D9B4_E019));
    mix(b ^ index.wrapping_mul(0xD6E8_FEB8_6659_FD93).wrapping_add(GOLDEN))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Named streams so unrelated consumers of one master seed never collide.
pub mod stream {
    pub const OBSERVATIONAL: u64 = 1;
    pub const ITERATION: u64 = 2;
    pub const CLOSURE: u64 = 3;
    pub const TEST: u64 = 4;
    pub const JOINT: u64 = 5;
    pub const REPLICATION: u64 = 6;
    pub const GRAPH: u64 = 7;
    pub const MODEL: u64 = 8;
    pub const QUERY: u64 = 9;
    pub const ORACLE: u64 = 10;
    pub const ESTIMATE: u64 = 11;
    pub const DATA: u64 = 12;
}

//! Deterministic RNG stream derivation.
//!
//! Every random draw in the crate comes from a ChaCha8 stream keyed by a
//! 64-bit seed. Sub-streams are derived by mixing a parent seed with a small
//! integer tag, so that e.g. the support draw and the noise draw of one trial
//! never share state regardless of how many values each consumes.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// SplitMix64 finaliser applied to `parent ^ tag`-style combinations.
pub fn mix(parent: u64, tag: u64) -> u64 {
    let mut z = parent
        .wrapping_add(tag.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stream(seed: u64, tag: u64) -> Rng {
    Rng::seed_from_u64(mix(seed, tag))
}

/// Tags for the independent streams of one sensing trial.
pub mod tag {
    pub const SUPPORT: u64 = 1;
    pub const PATTERN: u64 = 2;
    pub const SIGNAL: u64 = 3;
    pub const NOISE: u64 = 4;
    pub const CALIBRATION: u64 = 5;
}

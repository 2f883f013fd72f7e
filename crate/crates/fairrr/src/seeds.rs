//! Deterministic seed derivation.
//!
//! Every source of randomness in the crate draws from a seed derived as a
//! pure function of (base seed, purpose tag, index). Results are therefore
//! reproducible and independent of evaluation order.

pub const TAG_SPLIT: u64 = 1;
pub const TAG_INNER_SPLIT: u64 = 2;
pub const TAG_EVAL_REPEAT: u64 = 3;
pub const TAG_CALIBRATION: u64 = 4;
pub const TAG_PERTURB_FINAL: u64 = 5;
pub const TAG_FAIR_SAMPLE: u64 = 6;
pub const TAG_PREP: u64 = 7;

/// SplitMix64 finalizer (Steele et al. constants).
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from a base seed, a purpose tag and an index.
pub fn mix(base: u64, tag: u64, index: u64) -> u64 {
    splitmix64(splitmix64(base ^ splitmix64(tag)) ^ index)
}

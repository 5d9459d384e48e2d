//! Counter-based seed derivation.
//!
//! Every random draw in the pipeline descends from one master seed through
//! [`derive`], so any sample or stage can be regenerated in isolation and the
//! output never depends on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline]
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed number `index` of `seed`.
#[inline]
pub fn derive(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index.wrapping_mul(GOLDEN)))
}

/// Child seed keyed by a string label (FNV-1a folded into [`derive`]).
pub fn derive_named(seed: u64, label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    derive(seed, h)
}

/// Pipeline stage seed: `splitmix64(master ^ stage_index)`.
pub fn stage_seed(master: u64, stage_index: u64) -> u64 {
    splitmix64(master ^ stage_index)
}

/// Hash of a lattice coordinate, mapped to `[-1, 1]`.
#[inline]
pub fn lattice_value(seed: u64, a: u64, b: u64, c: u64) -> f64 {
    let h = splitmix64(seed ^ splitmix64(a ^ (b << 21) ^ (c << 42)));
    (h >> 11) as f64 * (2.0 / (1u64 << 53) as f64) - 1.0
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

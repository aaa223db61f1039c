//! Deterministic seed derivation.
//!
//! `mix_seed(&[master, theta_idx, alpha_idx, circuit_idx, restart_idx])`
//! folds each part in with the SplitMix64 finalizer, so any cell of a sweep
//! can be reproduced without running the others. Folding is sequential:
//! `mix_seed(&[a, b, c]) == extend_seed(mix_seed(&[a, b]), c)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn extend_seed(seed: u64, part: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ part)
}

pub fn mix_seed(parts: &[u64]) -> u64 {
    match parts.split_first() {
        None => splitmix64(0),
        Some((&first, rest)) => rest.iter().fold(splitmix64(first), |h, &p| extend_seed(h, p)),
    }
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

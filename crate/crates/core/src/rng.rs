//! Keyed random substreams.
//!
//! Every random decision in the crate is drawn from a ChaCha stream selected
//! by a `(seed, key)` pair, so results never depend on iteration order or on
//! how work is split across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Mixes a 64-bit value (SplitMix64 finaliser).
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from a parent seed and a sequence of keys.
pub fn derive_seed(seed: u64, keys: &[u64]) -> u64 {
    keys.iter()
        .fold(mix64(seed), |acc, &k| mix64(acc ^ mix64(k.wrapping_add(0x632b_e59b_d9b4_e019))))
}

/// A generator for the substream identified by `keys` under `seed`.
pub fn substream(seed: u64, keys: &[u64]) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(derive_seed(seed, keys))
}

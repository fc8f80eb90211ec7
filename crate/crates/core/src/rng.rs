//! Counter-based random streams.
//!
//! Every random draw in the crate comes from a stream keyed by a single
//! 64-bit seed plus a path of counters, so work split across threads draws
//! the same numbers regardless of scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent generator for `seed` and the counter path `key`.
pub fn stream(seed: u64, key: &[u64]) -> ChaCha8Rng {
    let mut state = splitmix64(seed);
    for &k in key {
        state = splitmix64(state ^ splitmix64(k.wrapping_add(0x5851_F42D_4C95_7F2D)));
    }
    ChaCha8Rng::seed_from_u64(state)
}

//! Reproducible random streams: the stream for replicate `r`, component `k` is
//! keyed by a hash of `(seed, r, k)`, so results do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Key of the stream `(seed, r, k)`.
pub fn derive_seed(seed: u64, r: u64, k: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ r) ^ k.rotate_left(32))
}

pub fn stream(seed: u64, r: u64, k: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, r, k))
}

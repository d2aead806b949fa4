//! Counter-derived random streams.
//!
//! Replica `i` of a run with base seed `b` always draws from the stream
//! seeded by [`stream_seed`]`(b, i)`, so results do not depend on how
//! replicas are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub type StreamRng = ChaCha8Rng;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replica `index` under `base_seed`.
pub fn stream_seed(base_seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(base_seed) ^ splitmix64(index.wrapping_add(0xA076_1D64_78BD_642F)))
}

pub fn rng_from_seed(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Runs `f(i, seed_i)` for every replica, in parallel, returning results in
/// replica order.
pub fn replicate<T, F>(base_seed: u64, replicas: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, u64) -> T + Sync + Send,
{
    (0..replicas)
        .into_par_iter()
        .map(|i| f(i, stream_seed(base_seed, i as u64)))
        .collect()
}

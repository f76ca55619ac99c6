//! Counter-based RNG streams keyed by (master seed, start vertex, pass, step).
//!
//! Every sample taken at walk step `step` of the walk (start, pass) draws
//! from the same stream no matter which vertex or worker executes it, so all
//! exact algorithm variants produce bit-identical walks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[inline]
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Seed for the stream of walk step `step` of walk (`start`, `pass`).
#[inline]
pub fn step_stream_seed(master_seed: u64, start: u64, pass: u64, step: u64) -> u64 {
    let mut h = splitmix64(master_seed);
    h = splitmix64(h ^ start);
    h = splitmix64(h ^ pass);
    splitmix64(h ^ step)
}

#[inline]
pub fn step_rng(master_seed: u64, start: u64, pass: u64, step: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(step_stream_seed(master_seed, start, pass, step))
}

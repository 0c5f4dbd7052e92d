//! Seed derivation.
//!
//! Every stochastic routine takes a `u64` seed. Independent sub-streams are
//! derived by hashing `(seed, stream, index)` with a splitmix64 finalizer and
//! seeding a ChaCha8 generator from the result, so work item `i` always sees
//! the same numbers no matter which thread runs it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type Rng = ChaCha8Rng;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed for `(stream, index)` under `seed`.
pub fn derive(seed: u64, stream: u64, index: u64) -> u64 {
    mix(mix(mix(seed) ^ stream.wrapping_mul(0xa076_1d64_78bd_642f)) ^ index)
}

/// Generator for sub-stream `(stream, index)` of `seed`.
pub fn stream(seed: u64, stream: u64, index: u64) -> Rng {
    Rng::seed_from_u64(derive(seed, stream, index))
}

pub fn gaussian(rng: &mut Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn gaussian_vec(rng: &mut Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| gaussian(rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: u64 = stream(7, 1, 3).random();
        let b: u64 = stream(7, 1, 3).random();
        let c: u64 = stream(7, 1, 4).random();
        let d: u64 = stream(7, 2, 3).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }
}

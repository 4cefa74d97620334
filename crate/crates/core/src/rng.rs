//! Seed derivation and small random helpers shared by the samplers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::Rational;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Mixes a base seed with a path of indices, so that a unit of work gets the
/// same stream no matter which thread or chunk runs it.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(base), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `-p/q` with `p in 1..=max_num`, `q in 1..=max_den`.
pub fn negative_rational<R: Rng>(rng: &mut R, max_num: i64, max_den: i64) -> Rational {
    let p = rng.random_range(1..=max_num);
    let q = rng.random_range(1..=max_den);
    Rational::new((-p).into(), q.into())
}

/// A nonzero rational in `[-max_num, max_num]` with denominator up to `max_den`.
pub fn signed_rational<R: Rng>(rng: &mut R, max_num: i64, max_den: i64) -> Rational {
    let v = negative_rational(rng, max_num, max_den);
    if rng.random_bool(0.5) {
        -v
    } else {
        v
    }
}

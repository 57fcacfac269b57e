//! Seeded random streams.
//!
//! Every stochastic routine takes a `u64` seed. Suites derive one substream
//! per trial: the generator is ChaCha20 seeded with `seed_from_u64(seed)` and
//! switched to stream `trial_index`, so trials can run in any order and
//! still draw the same numbers on every platform.

use faer::c64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

/// Name and version of the generator and stream-splitting rule, recorded in reports.
pub const RNG_NAME: &str = "chacha20-stream-v1";

pub type StdRng = ChaCha20Rng;

pub fn from_seed(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn substream(seed: u64, index: u64) -> ChaCha20Rng {
    let mut r = ChaCha20Rng::seed_from_u64(seed);
    r.set_stream(index);
    r
}

/// Complex normal with `E|z|² = 1`.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> c64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

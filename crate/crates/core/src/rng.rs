//! Seeded, splittable random streams.
//!
//! Every Monte Carlo trial draws from its own ChaCha8 stream selected by
//! `(seed, index)`, so results do not depend on how trials are scheduled
//! across workers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// Independent stream number `index` under the master `seed`.
pub fn substream(seed: u64, index: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Uniform draw on the open interval (0, 1).
#[inline]
pub(crate) fn open01<R: rand::Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(rand_distr::Open01)
}

//! Seeded random streams.
//!
//! Monte Carlo batches draw from `ChaCha8` with the 64-bit stream id set
//! from `(quantity, batch)`, so every batch is reproducible on its own and
//! batches can run in any order.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream for one `(quantity, batch)` pair under a master seed.
pub fn stream(seed: u64, quantity: u32, batch: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((u64::from(quantity) << 32) | u64::from(batch));
    rng
}

/// One draw from `CN(0, variance)`: real and imaginary parts are
/// independent `N(0, variance / 2)`.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

//! Seeded random streams.
//!
//! Every stochastic operation takes an explicit generator. Batches derive one
//! stream per replica from a master seed with [`stream`]: replica `i` uses
//! seed `master + i` (wrapping).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Open01, StandardNormal};

use crate::numerics::Real;

/// Generator used throughout the crate; portable and reproducible across
/// platforms.
pub type LabRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> LabRng {
    LabRng::seed_from_u64(seed)
}

/// Stream for replica `index` of a batch seeded with `master`.
pub fn stream(master: u64, index: u64) -> LabRng {
    LabRng::seed_from_u64(master.wrapping_add(index))
}

/// Uniform draw on the open interval (0, 1).
pub fn open01<T: Real, R: rand::Rng + ?Sized>(rng: &mut R) -> T {
    let u: f64 = Open01.sample(rng);
    T::lit(u)
}

/// Uniform draw on [0, 1).
pub fn unit<T: Real, R: rand::Rng + ?Sized>(rng: &mut R) -> T {
    T::lit(rng.random::<f64>())
}

/// Standard normal draw.
pub fn normal<T: Real, R: rand::Rng + ?Sized>(rng: &mut R) -> T {
    let z: f64 = StandardNormal.sample(rng);
    T::lit(z)
}

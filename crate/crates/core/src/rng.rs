//! Seeded random streams.
//!
//! Every random quantity in the crate is drawn from a ChaCha20 stream keyed by
//! a 64-bit seed and a 64-bit stream index, so results are reproducible across
//! platforms and independent of evaluation order.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::hilbert::ComplexVector;

pub type StreamRng = ChaCha20Rng;

/// Independent generator for `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Packs a two-level index into a single stream id.
pub fn stream_id(major: u32, minor: u32) -> u64 {
    ((major as u64) << 32) | minor as u64
}

/// Complex normal variate with independent N(0,1) real and imaginary parts.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im)
}

pub fn complex_gaussian_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexVector {
    ComplexVector::from_fn(n, |_| complex_normal(rng))
}

/// Uniformly distributed point on the unit sphere of `ℂⁿ`.
pub fn unit_sphere_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexVector {
    loop {
        let v = complex_gaussian_vector(rng, n);
        let norm = v.norm();
        if norm > 1e-300 {
            return v.scale(1.0 / norm);
        }
    }
}

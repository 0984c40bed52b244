//! Seeded random streams.
//!
//! Every random quantity in the simulator is drawn from a [`Stream`] keyed by
//! a master seed plus a structural path (domain tag and indices). Streams for
//! different paths are statistically independent ChaCha8 instances, so the
//! order in which work items execute — or the number of worker threads —
//! cannot change any result.

use crate::math;
use num_complex::Complex;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Domain separation tags for derived streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Paths = 0xA7,
    Payload = 0xB3,
    Noise = 0xC1,
    Interleaver = 0xD9,
    Frame = 0xF0,
}

/// Key under construction: a master seed mixed with structural indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedStream(u64);

// splitmix64 finalizer; good avalanche, stable across platforms.
#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

impl SeedStream {
    pub fn new(master_seed: u64) -> Self {
        SeedStream(mix(master_seed ^ 0x6A09E667F3BCC908))
    }

    /// Absorb one index or tag into the key.
    #[must_use]
    pub fn with(self, v: u64) -> Self {
        SeedStream(mix(self.0 ^ v.wrapping_mul(0x9E3779B97F4A7C15)))
    }

    #[must_use]
    pub fn domain(self, d: Domain) -> Self {
        self.with(d as u64)
    }

    pub fn key(self) -> u64 {
        self.0
    }

    /// Instantiate the generator for this key.
    pub fn rng(self) -> Stream {
        Stream(ChaCha8Rng::seed_from_u64(self.0))
    }
}

/// A deterministic random generator (ChaCha8 behind a small facade).
#[derive(Debug, Clone)]
pub struct Stream(ChaCha8Rng);

impl Stream {
    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform in [0, 1) with 53-bit resolution.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi).
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// One fair bit.
    pub fn bit(&mut self) -> u8 {
        (self.next_u64() >> 63) as u8
    }

    /// Circularly-symmetric complex Gaussian with E|z|^2 = 1.
    ///
    /// Polar Box-Muller: |z|^2 ~ Exp(1), phase uniform.
    pub fn crandn(&mut self) -> Complex<f64> {
        let u1 = self.uniform().max(f64::MIN_POSITIVE);
        let u2 = self.uniform();
        let r = math::sqrt(-math::ln(u1));
        let th = 2.0 * core::f64::consts::PI * u2;
        Complex::new(r * math::cos(th), r * math::sin(th))
    }

    /// Complex Gaussian with E|z|^2 = `variance` (AWGN sample).
    pub fn cnoise(&mut self, variance: f64) -> Complex<f64> {
        self.crandn() * math::sqrt(variance)
    }
}

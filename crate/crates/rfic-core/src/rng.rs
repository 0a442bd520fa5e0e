//! Seeded, stream-indexed random number generation.
//!
//! Every stochastic routine in this crate draws from a [`StreamRng`]
//! constructed from a `(seed, stream)` pair. ChaCha supports 2^64
//! independent streams per seed, so concurrent tasks get disjoint,
//! reproducible randomness without sharing state: results depend only on
//! `(seed, stream)`, never on scheduling.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::math::standard_normal_quantile;

/// Counter-based generator identified by `(seed, stream)`.
#[derive(Debug, Clone)]
pub struct StreamRng {
    inner: ChaCha8Rng,
}

impl StreamRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        StreamRng { inner }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform draw on the open interval `(0, 1)`.
    ///
    /// Uses the top 53 bits shifted by half a grid step, so 0 and 1 are
    /// unreachable and the draw is symmetric around 1/2; safe to feed into
    /// quantile functions with singular endpoints.
    #[inline]
    pub fn uniform_open(&mut self) -> f64 {
        const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
        ((self.inner.next_u64() >> 11) as f64 + 0.5) * SCALE
    }

    /// Standard normal draw via the inverse CDF (one uniform per draw).
    #[inline]
    pub fn standard_normal(&mut self) -> f64 {
        standard_normal_quantile(self.uniform_open())
    }
}

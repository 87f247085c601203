//! Seeded uniform draws on dedicated ChaCha8 streams.
//!
//! Every stochastic component of the crate owns one of these streams,
//! keyed by a master seed plus a stream index. Draws are converted from
//! raw 64-bit output with a fixed 53-bit scaling, so sequences depend only
//! on the seed and the draw order within a stream — never on other
//! streams, evaluation order, or worker count.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

pub(crate) struct UniformStream {
    rng: ChaCha8Rng,
}

impl UniformStream {
    pub(crate) fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng }
    }

    /// Uniform draw in `[0, 1)`.
    pub(crate) fn next_unit(&mut self) -> f64 {
        // 53 high bits -> the full dyadic grid representable in f64.
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in `[lo, hi)`.
    pub(crate) fn next_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_unit()
    }
}

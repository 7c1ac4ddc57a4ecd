//! Counter-based random substreams.
//!
//! Trial `i` of a run seeded with `seed` always reads ChaCha8 stream `i` of
//! key `seed`, so the variates a trial sees do not depend on which thread
//! evaluates it or in which order trials are scheduled.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use statrs::function::erf::erfc_inv;

#[derive(Debug, Clone)]
pub struct TrialStream {
    rng: ChaCha8Rng,
}

impl TrialStream {
    pub fn new(seed: u64, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        Self { rng }
    }

    /// Uniform variate on the open interval (0, 1) with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        let bits = self.rng.next_u64() >> 11;
        (bits as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal variate by inversion of the normal CDF.
    pub fn standard_normal(&mut self) -> f64 {
        let p = self.uniform();
        -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p)
    }

    pub fn normal(&mut self, sigma: f64) -> f64 {
        sigma * self.standard_normal()
    }
}

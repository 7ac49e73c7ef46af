use alloc::vec::Vec;

use rand_chacha::ChaCha12Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

/// Identifies a reproducible stream of random numbers.
///
/// The generator is ChaCha12 keyed by `rand_core`'s `seed_from_u64(seed)`
/// expansion, with the ChaCha stream (nonce) set to `stream_id`. ChaCha is
/// counter based, so every `(seed, stream_id)` pair yields the same sequence
/// on every platform. Normal deviates use the `rand_distr` ziggurat sampler.
///
/// Monte Carlo loops use `stream_id = sample index`, which makes each sample
/// independent of how the loop is scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub const fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// Same seed, different stream.
    pub const fn substream(&self, stream_id: u64) -> Self {
        Self {
            seed: self.seed,
            stream_id,
        }
    }

    pub fn normals(&self) -> NormalSource {
        let mut rng = ChaCha12Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        NormalSource { rng }
    }
}

/// Standard normal deviates drawn from one [`RngStream`].
#[derive(Debug, Clone)]
pub struct NormalSource {
    rng: ChaCha12Rng,
}

impl NormalSource {
    pub fn draw(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    pub fn vector(&mut self, len: usize) -> Vec<f64> {
        (0..len).map(|_| self.draw()).collect()
    }
}

//! Deterministic, splittable Gaussian noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Gaussian draws keyed by `(base_seed, substream_index)`.
///
/// Each substream is a distinct ChaCha stream under the same key, so
/// substreams never overlap and a trajectory's draws do not depend on which
/// worker runs it.
#[derive(Clone, Debug)]
pub struct NoiseStream {
    base_seed: u64,
    substream_index: u64,
    rng: ChaCha8Rng,
}

impl NoiseStream {
    pub fn new(base_seed: u64, substream_index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
        rng.set_stream(substream_index);
        Self {
            base_seed,
            substream_index,
            rng,
        }
    }

    pub fn base_seed(&self) -> u64 {
        self.base_seed
    }

    pub fn substream_index(&self) -> u64 {
        self.substream_index
    }

    /// Standard normal draw.
    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Wiener increment with variance `dt`.
    pub fn wiener_increment(&mut self, dt: f64) -> f64 {
        dt.sqrt() * self.standard_normal()
    }

    pub fn fill_wiener(&mut self, dt: f64, out: &mut [f64]) {
        let sd = dt.sqrt();
        for x in out {
            *x = sd * self.standard_normal();
        }
    }
}

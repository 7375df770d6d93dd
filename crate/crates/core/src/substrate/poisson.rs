use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Bernoulli-per-step approximation of a Poisson spike train.
#[derive(Debug, Clone)]
pub struct PoissonSource {
    rate_hz: f64,
    dt_ms: f64,
    rng: ChaCha8Rng,
}

impl PoissonSource {
    /// `stream` selects an independent ChaCha stream for the same seed, so
    /// every source in a network can share the experiment seed.
    pub fn new(rate_hz: f64, dt_ms: f64, seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self {
            rate_hz: rate_hz.max(0.0),
            dt_ms,
            rng,
        }
    }

    pub fn rate_hz(&self) -> f64 {
        self.rate_hz
    }

    pub fn set_rate(&mut self, rate_hz: f64) {
        self.rate_hz = rate_hz.max(0.0);
    }

    pub fn probability(&self) -> f64 {
        (self.rate_hz * self.dt_ms / 1000.0).clamp(0.0, 1.0)
    }

    /// Draw this step's spike. The stream advances even at rate zero, so
    /// changing one source's rate never shifts another's sequence.
    pub fn spike(&mut self) -> bool {
        let p = self.probability();
        let draw: f64 = self.rng.gen();
        draw < p
    }
}

/// Functional form of [`PoissonSource::spike`].
pub fn poisson_spike(mut src: PoissonSource) -> (PoissonSource, bool) {
    let spiked = src.spike();
    (src, spiked)
}

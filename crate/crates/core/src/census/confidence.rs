use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::CensusError;
use crate::geogrid::{project, GridConfig, PlanarPolygon};
use crate::hashing::combine;
use crate::LbsLog;

pub const DEFAULT_SAMPLES: usize = 256;
pub const MIN_SAMPLES: usize = 16;

/// Monte-Carlo estimate of the probability that a log's true position lies
/// inside a polygon, assuming isotropic Gaussian noise with `σ = r/3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfidenceModel {
    samples: usize,
}

impl Default for ConfidenceModel {
    fn default() -> Self {
        ConfidenceModel {
            samples: DEFAULT_SAMPLES,
        }
    }
}

impl ConfidenceModel {
    pub fn new(samples: usize) -> Result<Self, CensusError> {
        if samples < MIN_SAMPLES {
            return Err(CensusError::TooFewSamples(samples));
        }
        Ok(ConfidenceModel { samples })
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    /// Fraction of `k` draws from `N((x, y), (r/3)²I)` that fall inside
    /// `polygon`. Coordinates are projected meters. The draws come from a
    /// generator seeded by `stream`, so equal inputs give equal outputs.
    pub fn estimate(&self, polygon: &PlanarPolygon, x: f64, y: f64, r: f64, stream: u64) -> f64 {
        let sigma = r / 3.0;
        let mut rng = ChaCha8Rng::seed_from_u64(stream);
        let mut hits = 0usize;
        for _ in 0..self.samples {
            let dx: f64 = rng.sample(StandardNormal);
            let dy: f64 = rng.sample(StandardNormal);
            hits += polygon.contains(x + sigma * dx, y + sigma * dy) as usize;
        }
        hits as f64 / self.samples as f64
    }

    /// Confidence of one log against a hospital polygon; the sample stream is
    /// keyed by `(seed, uid, ts, position)`.
    pub fn of_log(&self, log: &LbsLog, polygon: &PlanarPolygon, grid: &GridConfig, seed: u64) -> f64 {
        let (x, y) = project(log.lat, log.lng, grid);
        let stream = combine(&[seed, log.uid.0, log.ts as u64, log.lat.to_bits(), log.lng.to_bits()]);
        self.estimate(polygon, x, y, log.r, stream)
    }
}

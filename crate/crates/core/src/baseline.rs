//! Random lower bound: every pixel drawn independently and uniformly from the
//! dataset depth range.
//!
//! The stream for an image is keyed by `SHA-256(seed as u64 LE || image_id UTF-8)`
//! used as a ChaCha20 key. Pixel `i` (row-major) takes the `i`-th 64-bit word
//! of that keystream, so a map depends only on `(seed, image_id, shape)` and
//! never on evaluation order.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::DepthMap;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomBaselineConfig {
    seed: u64,
    low: f64,
    high: f64,
}

impl RandomBaselineConfig {
    /// Uniform depths on `(low, high]` meters.
    pub fn new(seed: u64, low: f64, high: f64) -> Result<Self> {
        if !(low.is_finite() && high.is_finite() && 0.0 <= low && low < high) {
            return Err(Error::InvalidConfig(format!(
                "baseline range must satisfy 0 <= low < high, got ({low}, {high}]"
            )));
        }
        Ok(Self { seed, low, high })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn low(&self) -> f64 {
        self.low
    }

    pub fn high(&self) -> f64 {
        self.high
    }
}

impl Default for RandomBaselineConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            low: 0.0,
            high: 10.0,
        }
    }
}

fn image_stream(seed: u64, image_id: &str) -> ChaCha20Rng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(image_id.as_bytes());
    ChaCha20Rng::from_seed(hasher.finalize().into())
}

/// Maps a 64-bit word to `(0, 1]` on a 2^-53 grid.
fn unit_interval_open_closed(word: u64) -> f64 {
    ((word >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn to_depth(cfg: &RandomBaselineConfig, word: u64) -> f64 {
    let d = cfg.low + (cfg.high - cfg.low) * unit_interval_open_closed(word);
    d.clamp(cfg.low.next_up(), cfg.high)
}

/// Random depth map for one image.
pub fn random_depth_map(
    cfg: &RandomBaselineConfig,
    image_id: &str,
    height: usize,
    width: usize,
) -> Result<DepthMap> {
    let mut rng = image_stream(cfg.seed, image_id);
    let data = (0..height * width)
        .map(|_| to_depth(cfg, rng.next_u64()))
        .collect();
    DepthMap::new(height, width, data)
}

/// Depth of a single pixel (row-major index) without generating the map.
pub fn random_depth_at(cfg: &RandomBaselineConfig, image_id: &str, index: usize) -> f64 {
    let mut rng = image_stream(cfg.seed, image_id);
    rng.set_word_pos(2 * index as u128);
    to_depth(cfg, rng.next_u64())
}

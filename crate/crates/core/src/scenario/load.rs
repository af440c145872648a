//! Diurnal load traces.

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::rng::stream;

/// Sinusoidal daily profile with per-object phase offset and Gaussian noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LoadModel {
    pub mean: f64,
    pub amplitude: f64,
    pub period_epochs: u64,
    pub noise_sigma: f64,
    pub clip_min: f64,
    pub clip_max: f64,
    /// Phase step between consecutive objects, radians.
    pub phase_step: f64,
}

impl Default for LoadModel {
    fn default() -> Self {
        Self {
            mean: 0.45,
            amplitude: 0.35,
            period_epochs: 1000,
            noise_sigma: 0.05,
            clip_min: 0.05,
            clip_max: 1.2,
            phase_step: 0.45,
        }
    }
}

impl LoadModel {
    /// Noise-free profile value.
    pub fn base(&self, epoch: u64, object: usize) -> f64 {
        let period = self.period_epochs.max(1) as f64;
        let angle = std::f64::consts::TAU * (epoch % self.period_epochs.max(1)) as f64 / period;
        self.mean + self.amplitude * (angle + self.phase_step * object as f64).sin()
    }

    /// Load of `object` at `epoch`; a pure function of its arguments.
    pub fn diurnal_load(&self, seed: u64, epoch: u64, object: usize) -> f64 {
        let mut rng = stream(seed, epoch, &format!("load/{object}"));
        let noise = Normal::new(0.0, self.noise_sigma.max(0.0))
            .map(|n| n.sample(&mut rng))
            .unwrap_or(0.0);
        (self.base(epoch, object) + noise).clamp(self.clip_min, self.clip_max)
    }
}

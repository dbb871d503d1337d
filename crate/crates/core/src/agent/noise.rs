//! Exploration noise added to the actor's output.

use rand::Rng;
use rand_distr::StandardNormal;

/// Exploration process choice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseConfig {
    /// `x ← x + θ(−x)dt + σ√dt ε`, reset to zero at episode start.
    OrnsteinUhlenbeck { theta: f64, sigma: f64, dt: f64 },
    /// Independent `N(0, σ²)` per step.
    Gaussian { sigma: f64 },
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig::OrnsteinUhlenbeck {
            theta: 0.15,
            sigma: 0.2,
            dt: 1.0,
        }
    }
}

/// Noise state; samples are in units of the action half-width.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseProcess {
    config: NoiseConfig,
    x: Vec<f64>,
}

impl NoiseProcess {
    pub fn new(config: NoiseConfig, dim: usize) -> Self {
        Self {
            config,
            x: vec![0.0; dim],
        }
    }

    pub fn reset(&mut self) {
        self.x.iter_mut().for_each(|v| *v = 0.0);
    }

    pub fn state(&self) -> &[f64] {
        &self.x
    }

    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Vec<f64> {
        match self.config {
            NoiseConfig::OrnsteinUhlenbeck { theta, sigma, dt } => {
                for v in self.x.iter_mut() {
                    let eps: f64 = rng.sample(StandardNormal);
                    *v += -theta * *v * dt + sigma * dt.sqrt() * eps;
                }
                self.x.clone()
            }
            NoiseConfig::Gaussian { sigma } => {
                for v in self.x.iter_mut() {
                    let eps: f64 = rng.sample(StandardNormal);
                    *v = sigma * eps;
                }
                self.x.clone()
            }
        }
    }
}

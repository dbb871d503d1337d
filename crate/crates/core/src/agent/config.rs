use std::fmt;
use std::str::FromStr;

use super::noise::NoiseConfig;
use crate::error::{Error, Result};
use crate::mlp::HIDDEN_WIDTH;

/// Which objective the actor ascends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// `(1 − α) ∇Q* + α ∇Q` with every network trained.
    Gdpg,
    /// `α = 1`; the augmented critic and the transition net are never touched.
    Ddpg,
    /// `α = 0`; `Q` is still trained so it can be inspected.
    Mdpg,
    /// `α = 0` and `Q` is not trained either.
    AugmentedOnly,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Gdpg, Mode::Ddpg, Mode::Mdpg, Mode::AugmentedOnly];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Gdpg => "gdpg",
            Mode::Ddpg => "ddpg",
            Mode::Mdpg => "mdpg",
            Mode::AugmentedOnly => "augmented_only",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown mode '{s}', expected gdpg, ddpg, mdpg or augmented_only")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GdpgConfig {
    pub mode: Mode,
    /// Weight on the model-free critic; overridden by every mode except `Gdpg`.
    pub alpha: f64,
    pub gamma: f64,
    pub tau: f64,
    pub batch_size: usize,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub transition_lr: f64,
    pub transition_l2_coeff: f64,
    pub buffer_capacity: usize,
    /// Uniform-random actions before the first update.
    pub warmup_steps: u64,
    pub noise: NoiseConfig,
    pub total_steps: u64,
    /// Train `Q*` and `T̂`; switching this off in `Gdpg` mode leaves them at initialization.
    pub auxiliary_updates: bool,
    pub hidden: usize,
}

impl Default for GdpgConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Gdpg,
            alpha: 0.5,
            gamma: 0.99,
            tau: 0.001,
            batch_size: 128,
            actor_lr: 1e-4,
            critic_lr: 1e-3,
            transition_lr: 1e-3,
            transition_l2_coeff: 1e-4,
            buffer_capacity: 1_000_000,
            warmup_steps: 1000,
            noise: NoiseConfig::default(),
            total_steps: 50_000,
            auxiliary_updates: true,
            hidden: HIDDEN_WIDTH,
        }
    }
}

impl GdpgConfig {
    /// The `α` the actor update actually uses.
    pub fn effective_alpha(&self) -> f64 {
        match self.mode {
            Mode::Gdpg => self.alpha,
            Mode::Ddpg => 1.0,
            Mode::Mdpg | Mode::AugmentedOnly => 0.0,
        }
    }

    pub fn trains_critic(&self) -> bool {
        self.mode != Mode::AugmentedOnly
    }

    /// Whether `Q*`, its target and `T̂` receive updates.
    pub fn trains_auxiliary(&self) -> bool {
        self.mode != Mode::Ddpg && self.auxiliary_updates
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return bad(format!("alpha must be a finite value >= 0, got {}", self.alpha));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return bad(format!("gamma must lie in [0, 1), got {}", self.gamma));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return bad(format!("tau must lie in (0, 1], got {}", self.tau));
        }
        for (name, lr) in [
            ("actor_lr", self.actor_lr),
            ("critic_lr", self.critic_lr),
            ("transition_lr", self.transition_lr),
        ] {
            if !(lr > 0.0 && lr.is_finite()) {
                return bad(format!("{name} must be positive, got {lr}"));
            }
        }
        if !(self.transition_l2_coeff >= 0.0 && self.transition_l2_coeff.is_finite()) {
            return bad(format!("transition_l2_coeff must be >= 0, got {}", self.transition_l2_coeff));
        }
        if self.batch_size == 0 || self.hidden == 0 {
            return bad("batch_size and hidden must be positive".into());
        }
        if self.buffer_capacity < self.batch_size {
            return bad(format!(
                "buffer_capacity {} is smaller than batch_size {}",
                self.buffer_capacity, self.batch_size
            ));
        }
        match self.noise {
            NoiseConfig::OrnsteinUhlenbeck { theta, sigma, dt } => {
                if !(theta >= 0.0 && sigma >= 0.0 && dt > 0.0) {
                    return bad("OU noise needs theta >= 0, sigma >= 0, dt > 0".into());
                }
            }
            NoiseConfig::Gaussian { sigma } => {
                if !(sigma >= 0.0) {
                    return bad("Gaussian noise needs sigma >= 0".into());
                }
            }
        }
        Ok(())
    }
}

use std::f64::consts::PI;

use rand::{Rng, RngCore};

use super::{KernelScore, MixedMdp};
use crate::error::Result;
use crate::linalg::RealVector;

/// Classic torque-limited pendulum swing-up with observation `(cos φ, sin φ, φ̇)`.
#[derive(Debug, Clone)]
pub struct PendulumEnv {
    pub gravity: f64,
    pub mass: f64,
    pub length: f64,
    pub dt: f64,
    pub max_speed: f64,
    pub max_steps: usize,
    low: [f64; 1],
    high: [f64; 1],
}

impl Default for PendulumEnv {
    fn default() -> Self {
        Self {
            gravity: 10.0,
            mass: 1.0,
            length: 1.0,
            dt: 0.05,
            max_speed: 8.0,
            max_steps: 200,
            low: [-2.0],
            high: [2.0],
        }
    }
}

fn angle_normalize(x: f64) -> f64 {
    (x + PI).rem_euclid(2.0 * PI) - PI
}

impl PendulumEnv {
    fn angle(s: &[f64]) -> f64 {
        s[1].atan2(s[0])
    }

    pub fn observation(theta: f64, theta_dot: f64) -> RealVector {
        RealVector::new(vec![theta.cos(), theta.sin(), theta_dot])
    }
}

impl MixedMdp for PendulumEnv {
    fn id(&self) -> &str {
        "pendulum"
    }

    fn state_dim(&self) -> usize {
        3
    }

    fn action_dim(&self) -> usize {
        1
    }

    fn action_low(&self) -> &[f64] {
        &self.low
    }

    fn action_high(&self) -> &[f64] {
        &self.high
    }

    fn max_episode_steps(&self) -> usize {
        self.max_steps
    }

    fn reset(&self, rng: &mut dyn RngCore) -> RealVector {
        let theta = rng.random_range(-PI..PI);
        let theta_dot = rng.random_range(-1.0..1.0);
        Self::observation(theta, theta_dot)
    }

    fn deterministic_map(&self, s: &[f64], a: &[f64]) -> RealVector {
        let theta = Self::angle(s);
        let u = a[0];
        let (g, m, l, dt) = (self.gravity, self.mass, self.length, self.dt);
        let theta_dot = s[2] + (3.0 * g / (2.0 * l) * theta.sin() + 3.0 / (m * l * l) * u) * dt;
        let next_theta = theta + theta_dot * dt;
        Self::observation(next_theta, theta_dot.clamp(-self.max_speed, self.max_speed))
    }

    fn mixing_coeff(&self, _s: &[f64], _a: &[f64]) -> f64 {
        1.0
    }

    fn stochastic_sample(&self, s: &[f64], a: &[f64], _rng: &mut dyn RngCore) -> RealVector {
        self.deterministic_map(s, a)
    }

    fn stochastic_mean(&self, s: &[f64], a: &[f64]) -> RealVector {
        self.deterministic_map(s, a)
    }

    fn reward(&self, s: &[f64], a: &[f64]) -> f64 {
        let theta = angle_normalize(Self::angle(s));
        -(theta * theta + 0.1 * s[2] * s[2] + 0.001 * a[0] * a[0])
    }

    fn is_deterministic(&self) -> bool {
        true
    }

    fn kernel_score(&self, _s: &[f64], _a: &[f64], _next: &[f64]) -> Result<Option<KernelScore>> {
        Ok(None)
    }
}

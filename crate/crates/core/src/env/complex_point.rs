use rand::RngCore;

use super::{uniform_box, Jacobians, KernelScore, MixedMdp};
use crate::error::Result;
use crate::linalg::{norm, RealMatrix, RealVector};

const DIM: usize = 5;
const ACTION_LIMIT: f64 = 0.1;
/// `‖a‖²` at a corner of the action box; `f` reaches 1 there.
const MIXING_SCALE: f64 = 0.05;

/// A point in `[-1, 1]^5` pushed toward the origin.
///
/// `T(s, a) = s + a` with probability `f(s, a) = ‖a‖² / 0.05`; otherwise the
/// next state is uniform on `[-1, 1]^5`. Reward is `-‖s + a‖`.
#[derive(Debug, Clone)]
pub struct ComplexPointEnv {
    /// Episodes end once `‖s'‖` drops below this radius.
    pub termination_radius: f64,
    pub max_steps: usize,
    low: [f64; DIM],
    high: [f64; DIM],
}

impl Default for ComplexPointEnv {
    fn default() -> Self {
        Self::new(0.05)
    }
}

impl ComplexPointEnv {
    pub fn new(termination_radius: f64) -> Self {
        Self {
            termination_radius,
            max_steps: 100,
            low: [-ACTION_LIMIT; DIM],
            high: [ACTION_LIMIT; DIM],
        }
    }
}

impl MixedMdp for ComplexPointEnv {
    fn id(&self) -> &str {
        "complex_point"
    }

    fn state_dim(&self) -> usize {
        DIM
    }

    fn action_dim(&self) -> usize {
        DIM
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
        uniform_box(DIM, 1.0, rng)
    }

    fn deterministic_map(&self, s: &[f64], a: &[f64]) -> RealVector {
        RealVector::new(s.iter().zip(a).map(|(x, y)| x + y).collect())
    }

    fn mixing_coeff(&self, _s: &[f64], a: &[f64]) -> f64 {
        // Rounding can push a corner action a hair above 1.
        (crate::linalg::dot(a, a) / MIXING_SCALE).min(1.0)
    }

    fn stochastic_sample(&self, _s: &[f64], _a: &[f64], rng: &mut dyn RngCore) -> RealVector {
        uniform_box(DIM, 1.0, rng)
    }

    fn stochastic_mean(&self, _s: &[f64], _a: &[f64]) -> RealVector {
        RealVector::zeros(DIM)
    }

    fn reward(&self, s: &[f64], a: &[f64]) -> f64 {
        -norm(&self.deterministic_map(s, a))
    }

    fn is_terminal(&self, s: &[f64]) -> bool {
        norm(s) < self.termination_radius
    }

    fn jacobians(&self, s: &[f64], a: &[f64]) -> Result<Jacobians> {
        let sum = self.deterministic_map(s, a);
        let dist = sum.norm();
        let r_grad = if dist > 0.0 {
            sum.scaled(-1.0 / dist)
        } else {
            RealVector::zeros(DIM)
        };
        Ok(Jacobians {
            t_s: RealMatrix::identity(DIM),
            t_a: RealMatrix::identity(DIM),
            r_s: r_grad.clone(),
            r_a: r_grad,
            f_s: RealVector::zeros(DIM),
            f_a: RealVector::new(a.iter().map(|v| 2.0 * v / MIXING_SCALE).collect()),
        })
    }

    /// The uniform kernel ignores `(s, a)`, so its score vanishes identically.
    fn kernel_score(&self, _s: &[f64], _a: &[f64], _next: &[f64]) -> Result<Option<KernelScore>> {
        Ok(None)
    }
}

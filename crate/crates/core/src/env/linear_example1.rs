use rand::RngCore;

use super::{uniform_box, Jacobians, KernelScore, MixedMdp};
use crate::error::Result;
use crate::linalg::{RealMatrix, RealVector};

/// Two-dimensional linear system whose value gradient blows up for `γ ≥ 1/4`.
///
/// `T(s, a) = (2s₁ + 2s₂ + a₁, 2s₁ + 2s₂ + a₂)`, `r(s, a) = -sᵀa`, fully deterministic.
#[derive(Debug, Clone)]
pub struct LinearExample1Env {
    pub max_steps: usize,
    low: [f64; 2],
    high: [f64; 2],
}

impl Default for LinearExample1Env {
    fn default() -> Self {
        Self {
            max_steps: 100,
            low: [f64::NEG_INFINITY; 2],
            high: [f64::INFINITY; 2],
        }
    }
}

impl MixedMdp for LinearExample1Env {
    fn id(&self) -> &str {
        "linear_example1"
    }

    fn state_dim(&self) -> usize {
        2
    }

    fn action_dim(&self) -> usize {
        2
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
        uniform_box(2, 1.0, rng)
    }

    fn deterministic_map(&self, s: &[f64], a: &[f64]) -> RealVector {
        let shared = 2.0 * s[0] + 2.0 * s[1];
        RealVector::new(vec![shared + a[0], shared + a[1]])
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
        -crate::linalg::dot(s, a)
    }

    fn is_deterministic(&self) -> bool {
        true
    }

    fn jacobians(&self, s: &[f64], a: &[f64]) -> Result<Jacobians> {
        Ok(Jacobians {
            t_s: RealMatrix::from_rows(&[&[2.0, 2.0], &[2.0, 2.0]]),
            t_a: RealMatrix::identity(2),
            r_s: RealVector::new(a.iter().map(|v| -v).collect()),
            r_a: RealVector::new(s.iter().map(|v| -v).collect()),
            f_s: RealVector::zeros(2),
            f_a: RealVector::zeros(2),
        })
    }

    fn kernel_score(&self, _s: &[f64], _a: &[f64], _next: &[f64]) -> Result<Option<KernelScore>> {
        Ok(None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::finite_difference_jacobians;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn step_from_unit_state() {
        let env = LinearExample1Env::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let tr = env.step(&[1.0, 0.0], &[0.0, 0.0], &mut rng).unwrap();
        assert_eq!(&*tr.next_state, &[2.0, 2.0]);
        assert_eq!(tr.reward, 0.0);
        assert!(!tr.done);
    }

    #[test]
    fn state_jacobian_is_constant() {
        let env = LinearExample1Env::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let expected = RealMatrix::from_rows(&[&[2.0, 2.0], &[2.0, 2.0]]);
        for _ in 0..100 {
            let s = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
            let a = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
            let j = env.jacobians(&s, &a).unwrap();
            assert_eq!(j.t_s, expected);
            assert_eq!(j.t_a, RealMatrix::identity(2));
            let fd = finite_difference_jacobians(&env, &s, &a, 1e-6);
            assert!(fd.t_s.add(&expected.scaled(-1.0)).unwrap().max_norm() < 1e-6);
            for (x, y) in j.r_s.iter().zip(fd.r_s.iter()).chain(j.r_a.iter().zip(fd.r_a.iter())) {
                assert!((x - y).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn augmented_map_is_identity_of_t() {
        let env = LinearExample1Env::default();
        let s = [0.3, -1.2];
        let a = [5.0, 2.0];
        assert_eq!(env.augmented_map(&s, &a).unwrap(), env.deterministic_map(&s, &a));
    }
}

use rand::RngCore;

use super::{finite_difference_jacobians, Jacobians, KernelScore, MixedMdp};
use crate::error::Result;
use crate::linalg::RealVector;

macro_rules! delegate_common {
    () => {
        fn state_dim(&self) -> usize {
            self.inner.state_dim()
        }
        fn action_dim(&self) -> usize {
            self.inner.action_dim()
        }
        fn action_low(&self) -> &[f64] {
            self.inner.action_low()
        }
        fn action_high(&self) -> &[f64] {
            self.inner.action_high()
        }
        fn max_episode_steps(&self) -> usize {
            self.inner.max_episode_steps()
        }
        fn reset(&self, rng: &mut dyn RngCore) -> RealVector {
            self.inner.reset(rng)
        }
        fn deterministic_map(&self, s: &[f64], a: &[f64]) -> RealVector {
            self.inner.deterministic_map(s, a)
        }
        fn stochastic_sample(&self, s: &[f64], a: &[f64], rng: &mut dyn RngCore) -> RealVector {
            self.inner.stochastic_sample(s, a, rng)
        }
        fn stochastic_mean(&self, s: &[f64], a: &[f64]) -> RealVector {
            self.inner.stochastic_mean(s, a)
        }
        fn reward(&self, s: &[f64], a: &[f64]) -> f64 {
            self.inner.reward(s, a)
        }
        fn is_terminal(&self, s: &[f64]) -> bool {
            self.inner.is_terminal(s)
        }
    };
}

/// The same environment with the stochastic branch switched off (`f ≡ 1`).
pub struct ForcedDeterministic {
    inner: Box<dyn MixedMdp>,
    id: String,
}

impl ForcedDeterministic {
    pub fn new(env: impl MixedMdp + 'static) -> Self {
        Self::from_boxed(Box::new(env))
    }

    pub fn from_boxed(inner: Box<dyn MixedMdp>) -> Self {
        let id = format!("{}_deterministic", inner.id());
        Self { inner, id }
    }
}

impl MixedMdp for ForcedDeterministic {
    fn id(&self) -> &str {
        &self.id
    }

    delegate_common!();

    fn mixing_coeff(&self, _s: &[f64], _a: &[f64]) -> f64 {
        1.0
    }

    fn is_deterministic(&self) -> bool {
        true
    }

    fn jacobians(&self, s: &[f64], a: &[f64]) -> Result<Jacobians> {
        let mut j = self.inner.jacobians(s, a)?;
        j.f_s = RealVector::zeros(self.state_dim());
        j.f_a = RealVector::zeros(self.action_dim());
        Ok(j)
    }

    fn kernel_score(&self, _s: &[f64], _a: &[f64], _next: &[f64]) -> Result<Option<KernelScore>> {
        Ok(None)
    }
}

/// Supplies Jacobians by central differences for environments without analytic forms.
pub struct FiniteDifferenceJacobians {
    inner: Box<dyn MixedMdp>,
    pub step: f64,
}

impl FiniteDifferenceJacobians {
    pub fn new(env: impl MixedMdp + 'static) -> Self {
        Self::from_boxed(Box::new(env))
    }

    pub fn from_boxed(inner: Box<dyn MixedMdp>) -> Self {
        Self { inner, step: 1e-6 }
    }
}

impl MixedMdp for FiniteDifferenceJacobians {
    fn id(&self) -> &str {
        self.inner.id()
    }

    delegate_common!();

    fn mixing_coeff(&self, s: &[f64], a: &[f64]) -> f64 {
        self.inner.mixing_coeff(s, a)
    }

    fn is_deterministic(&self) -> bool {
        self.inner.is_deterministic()
    }

    fn jacobians(&self, s: &[f64], a: &[f64]) -> Result<Jacobians> {
        Ok(finite_difference_jacobians(self.inner.as_ref(), s, a, self.step))
    }

    fn kernel_score(&self, s: &[f64], a: &[f64], next: &[f64]) -> Result<Option<KernelScore>> {
        self.inner.kernel_score(s, a, next)
    }
}

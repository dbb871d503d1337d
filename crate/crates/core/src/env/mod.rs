//! Environments whose next state is drawn from a deterministic map `T(s, a)`
//! with probability `f(s, a)` and from a stochastic kernel `p(·|s, a)` otherwise.

mod complex_point;
mod linear_example1;
mod pendulum;
mod quadratic;
mod wrappers;

pub use complex_point::ComplexPointEnv;
pub use linear_example1::LinearExample1Env;
pub use pendulum::PendulumEnv;
pub use quadratic::{Curvature, QuadraticConvexEnv};
pub use wrappers::{FiniteDifferenceJacobians, ForcedDeterministic};

use rand::{Rng, RngCore};

use crate::error::{ensure_dim, Error, Result};
use crate::linalg::{RealMatrix, RealVector};

/// Outcome of one environment step.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub next_state: RealVector,
    pub reward: f64,
    /// The next state lies in the terminal set. Time limits are the caller's business.
    pub done: bool,
}

/// Jacobians and gradients of `T`, `r` and `f` at one `(s, a)`.
///
/// Matrices follow the usual layout `t_s[(i, j)] = ∂T_i/∂s_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Jacobians {
    pub t_s: RealMatrix,
    pub t_a: RealMatrix,
    pub r_s: RealVector,
    pub r_a: RealVector,
    pub f_s: RealVector,
    pub f_a: RealVector,
}

/// Score of the stochastic kernel, `∇ log p(s'|s, a)` with respect to `s` and `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelScore {
    pub s: RealVector,
    pub a: RealVector,
}

/// The mixed deterministic/stochastic transition model.
///
/// Environments are stateless: the caller owns the current state and the rng.
pub trait MixedMdp: Send + Sync {
    fn id(&self) -> &str;
    fn state_dim(&self) -> usize;
    fn action_dim(&self) -> usize;
    fn action_low(&self) -> &[f64];
    fn action_high(&self) -> &[f64];
    fn max_episode_steps(&self) -> usize;

    /// Samples an initial state from `p₀`.
    fn reset(&self, rng: &mut dyn RngCore) -> RealVector;
    fn deterministic_map(&self, s: &[f64], a: &[f64]) -> RealVector;
    /// Probability `f(s, a) ∈ [0, 1]` of taking the deterministic branch.
    fn mixing_coeff(&self, s: &[f64], a: &[f64]) -> f64;
    fn stochastic_sample(&self, s: &[f64], a: &[f64], rng: &mut dyn RngCore) -> RealVector;
    /// Mean of the stochastic kernel.
    fn stochastic_mean(&self, s: &[f64], a: &[f64]) -> RealVector;
    fn reward(&self, s: &[f64], a: &[f64]) -> f64;

    fn is_terminal(&self, _s: &[f64]) -> bool {
        false
    }

    /// True when `f ≡ 1`, i.e. the stochastic branch can never fire.
    fn is_deterministic(&self) -> bool {
        false
    }

    fn jacobians(&self, _s: &[f64], _a: &[f64]) -> Result<Jacobians> {
        Err(Error::Unsupported(format!("{} has no analytic Jacobians", self.id())))
    }

    /// `∇ log p(s'|s, a)`; `None` when the kernel does not depend on `(s, a)`.
    fn kernel_score(&self, _s: &[f64], _a: &[f64], _next: &[f64]) -> Result<Option<KernelScore>> {
        Err(Error::Unsupported(format!("{} has no kernel density", self.id())))
    }

    fn step(&self, s: &[f64], a: &[f64], rng: &mut dyn RngCore) -> Result<Transition> {
        self.check_inputs(s, a)?;
        let (next_state, _) = sample_transition(self, s, a, rng);
        let done = self.is_terminal(&next_state);
        Ok(Transition {
            next_state,
            reward: self.reward(s, a),
            done,
        })
    }

    /// `T*(s, a) = E[s'|s, a] = f T(s, a) + (1 - f) E[p(·|s, a)]`.
    fn augmented_map(&self, s: &[f64], a: &[f64]) -> Result<RealVector> {
        self.check_inputs(s, a)?;
        let f = self.mixing_coeff(s, a);
        if f >= 1.0 {
            return Ok(self.deterministic_map(s, a));
        }
        let mut out = self.stochastic_mean(s, a).scaled(1.0 - f);
        if f > 0.0 {
            out.axpy(f, &self.deterministic_map(s, a));
        }
        Ok(out)
    }

    /// Dimension, finiteness and action-box checks shared by `step` and friends.
    fn check_inputs(&self, s: &[f64], a: &[f64]) -> Result<()> {
        ensure_dim("state", self.state_dim(), s.len())?;
        ensure_dim("action", self.action_dim(), a.len())?;
        crate::error::ensure_finite("state", s)?;
        crate::error::ensure_finite("action", a)?;
        check_action_box(a, self.action_low(), self.action_high())
    }
}

/// Which branch of the mixture produced a next state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Deterministic,
    Stochastic,
}

/// Draws `s'` from the mixture without input checks.
///
/// A uniform variate is consumed only when `0 < f < 1`, so fully
/// deterministic environments never touch the rng.
pub fn sample_transition<E: MixedMdp + ?Sized>(env: &E, s: &[f64], a: &[f64], rng: &mut dyn RngCore) -> (RealVector, Branch) {
    let f = env.mixing_coeff(s, a);
    let branch = if f >= 1.0 {
        Branch::Deterministic
    } else if f <= 0.0 {
        Branch::Stochastic
    } else if rng.random::<f64>() < f {
        Branch::Deterministic
    } else {
        Branch::Stochastic
    };
    let next = match branch {
        Branch::Deterministic => env.deterministic_map(s, a),
        Branch::Stochastic => env.stochastic_sample(s, a, rng),
    };
    (next, branch)
}

pub fn check_action_box(a: &[f64], low: &[f64], high: &[f64]) -> Result<()> {
    for (index, ((&value, &lo), &hi)) in a.iter().zip(low).zip(high).enumerate() {
        if value < lo || value > hi {
            return Err(Error::ActionOutOfBounds {
                index,
                value,
                low: lo,
                high: hi,
            });
        }
    }
    Ok(())
}

/// Clips `a` into the box in place.
pub fn clip_action(a: &mut [f64], low: &[f64], high: &[f64]) {
    for ((v, &lo), &hi) in a.iter_mut().zip(low).zip(high) {
        *v = v.clamp(lo, hi);
    }
}

pub(crate) fn uniform_box(dim: usize, half_width: f64, rng: &mut dyn RngCore) -> RealVector {
    RealVector::new((0..dim).map(|_| rng.random_range(-half_width..half_width)).collect())
}

/// Environment ids accepted by [`make_env`].
pub const ENV_IDS: [&str; 4] = ["complex_point", "linear_example1", "pendulum", "quadratic_convex"];

/// Builds an environment with its default configuration from a string id.
pub fn make_env(id: &str) -> Result<Box<dyn MixedMdp>> {
    match id {
        "complex_point" => Ok(Box::new(ComplexPointEnv::default())),
        "linear_example1" => Ok(Box::new(LinearExample1Env::default())),
        "pendulum" => Ok(Box::new(PendulumEnv::default())),
        "quadratic_convex" => Ok(Box::new(QuadraticConvexEnv::default())),
        other => Err(Error::InvalidConfig(format!(
            "unknown environment '{other}', expected one of {ENV_IDS:?}"
        ))),
    }
}

/// Central finite-difference Jacobians of `T`, `r` and `f`.
pub fn finite_difference_jacobians(env: &dyn MixedMdp, s: &[f64], a: &[f64], h: f64) -> Jacobians {
    let n = env.state_dim();
    let m = env.action_dim();
    let mut t_s = RealMatrix::zeros(n, n);
    let mut t_a = RealMatrix::zeros(n, m);
    let mut r_s = RealVector::zeros(n);
    let mut r_a = RealVector::zeros(m);
    let mut f_s = RealVector::zeros(n);
    let mut f_a = RealVector::zeros(m);
    let mut sp = s.to_vec();
    for j in 0..n {
        sp[j] = s[j] + h;
        let (tp, rp, fp) = (env.deterministic_map(&sp, a), env.reward(&sp, a), env.mixing_coeff(&sp, a));
        sp[j] = s[j] - h;
        let (tm, rm, fm) = (env.deterministic_map(&sp, a), env.reward(&sp, a), env.mixing_coeff(&sp, a));
        sp[j] = s[j];
        for i in 0..n {
            t_s[(i, j)] = (tp[i] - tm[i]) / (2.0 * h);
        }
        r_s[j] = (rp - rm) / (2.0 * h);
        f_s[j] = (fp - fm) / (2.0 * h);
    }
    let mut ap = a.to_vec();
    for j in 0..m {
        ap[j] = a[j] + h;
        let (tp, rp, fp) = (env.deterministic_map(s, &ap), env.reward(s, &ap), env.mixing_coeff(s, &ap));
        ap[j] = a[j] - h;
        let (tm, rm, fm) = (env.deterministic_map(s, &ap), env.reward(s, &ap), env.mixing_coeff(s, &ap));
        ap[j] = a[j];
        for i in 0..n {
            t_a[(i, j)] = (tp[i] - tm[i]) / (2.0 * h);
        }
        r_a[j] = (rp - rm) / (2.0 * h);
        f_a[j] = (fp - fm) / (2.0 * h);
    }
    Jacobians {
        t_s,
        t_a,
        r_s,
        r_a,
        f_s,
        f_a,
    }
}

//! Monte-Carlo policy-gradient estimators for the truncated objective
//! `J(θ) = E_{s₀~p₀}[Σ_{t<horizon} γᵗ r_t]`.
//!
//! The discounted state distribution is realized by weighting each visited
//! state with `γᵗ` along sampled trajectories. Every estimator returns its
//! per-trajectory term sums so degenerate mixtures can be compared term by term.

use rand::RngCore;

use super::value::{backward_step, sampled_value_and_grad, total_derivatives, value_estimate, TotalDerivatives};
use crate::env::{sample_transition, MixedMdp};
use crate::error::{Error, Result};
use crate::linalg::{axpy, RealVector};
use crate::policy::DeterministicPolicy;

/// Monte-Carlo budget of an estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientSettings {
    pub gamma: f64,
    /// Trajectories from `p₀` averaged into the estimate.
    pub rollouts: usize,
    pub horizon: usize,
    /// Draws `s' ~ p(·|s, a)` per visited state for the stochastic-branch terms.
    pub mc_next_states: usize,
    /// Rollouts averaged into each `V̂`; forced to 1 on deterministic environments.
    pub value_rollouts: usize,
}

impl GradientSettings {
    pub fn new(gamma: f64, rollouts: usize, horizon: usize) -> Self {
        Self {
            gamma,
            rollouts,
            horizon,
            mc_next_states: 8,
            value_rollouts: 32,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.rollouts == 0 || self.horizon == 0 {
            return Err(Error::InvalidConfig("rollouts and horizon must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::InvalidConfig(format!("gamma {} outside [0, 1]", self.gamma)));
        }
        if self.mc_next_states == 0 || self.value_rollouts == 0 {
            return Err(Error::InvalidConfig("Monte-Carlo sample counts must be positive".into()));
        }
        Ok(())
    }
}

/// The five contributions to the gradient, each already pushed through `∇_θ μ`
/// and weighted by `γᵗ`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientTerms {
    /// `∇_θμ ∇_a r`.
    pub reward: Vec<f64>,
    /// `γ f ∇_θμ ∇_a T ∇_{s'} V(s')` at `s' = T(s, a)`.
    pub deterministic: Vec<f64>,
    /// `γ (1 - f) ∇_θμ E_p[∇_a log p(s'|s, a) V(s')]`.
    pub kernel: Vec<f64>,
    /// `γ ∇_θμ ∇_a f V(T(s, a))`.
    pub mixing_deterministic: Vec<f64>,
    /// `-γ ∇_θμ ∇_a f E_p[V(s')]`.
    pub mixing_stochastic: Vec<f64>,
}

impl GradientTerms {
    fn zeros(p: usize) -> Self {
        Self {
            reward: vec![0.0; p],
            deterministic: vec![0.0; p],
            kernel: vec![0.0; p],
            mixing_deterministic: vec![0.0; p],
            mixing_stochastic: vec![0.0; p],
        }
    }

    pub fn total(&self) -> Vec<f64> {
        let mut out = self.reward.clone();
        for term in [&self.deterministic, &self.kernel, &self.mixing_deterministic, &self.mixing_stochastic] {
            axpy(&mut out, 1.0, term);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyGradientEstimate {
    /// Mean of the per-trajectory totals.
    pub gradient: Vec<f64>,
    pub trajectories: Vec<GradientTerms>,
    /// Mean truncated discounted return of the sampled trajectories.
    pub objective: f64,
}

impl PolicyGradientEstimate {
    fn from_trajectories(trajectories: Vec<GradientTerms>, returns: &[f64], p: usize) -> Self {
        let mut gradient = vec![0.0; p];
        for t in &trajectories {
            axpy(&mut gradient, 1.0, &t.total());
        }
        let k = trajectories.len() as f64;
        gradient.iter_mut().for_each(|g| *g /= k);
        let objective = returns.iter().sum::<f64>() / returns.len() as f64;
        Self {
            gradient,
            trajectories,
            objective,
        }
    }
}

/// Adds `weight · ∇_θμ(s) · upstream` into `acc`.
fn accumulate<P: DeterministicPolicy + ?Sized>(
    acc: &mut [f64],
    policy: &P,
    s: &[f64],
    upstream: &RealVector,
    weight: f64,
) -> Result<()> {
    let g = policy.param_vjp(s, upstream)?;
    axpy(acc, weight, &g);
    Ok(())
}

/// `∇_a Tᵀ v`, scaled by `scale`.
fn pathwise_action_term(d: &TotalDerivatives, next_grad: &[f64], scale: f64) -> Result<RealVector> {
    Ok(d.partial.t_a.matvec_transposed(next_grad)?.scaled(scale))
}

/// Exact gradient of the truncated objective on deterministic environments.
///
/// Each trajectory rolls `T` from `s₀ ~ p₀`, then a backward pass yields the
/// value gradients of the remaining horizon at every visited state.
pub fn policy_gradient_deterministic<P: DeterministicPolicy + ?Sized>(
    env: &dyn MixedMdp,
    policy: &P,
    settings: &GradientSettings,
    rng: &mut dyn RngCore,
) -> Result<PolicyGradientEstimate> {
    settings.validate()?;
    if !env.is_deterministic() {
        return Err(Error::Unsupported(format!(
            "{} is not deterministic; use the general estimator",
            env.id()
        )));
    }
    let p = policy.num_params();
    let gamma = settings.gamma;
    let mut trajectories = Vec::with_capacity(settings.rollouts);
    let mut returns = Vec::with_capacity(settings.rollouts);
    for _ in 0..settings.rollouts {
        let s0 = env.reset(rng);
        let mut states = Vec::with_capacity(settings.horizon);
        let mut derivs = Vec::with_capacity(settings.horizon);
        let mut state = s0;
        let mut ret = 0.0;
        let mut discount = 1.0;
        for _ in 0..settings.horizon {
            let d = total_derivatives(env, policy, &state)?;
            ret += discount * env.reward(&state, &d.action);
            discount *= gamma;
            let next = env.deterministic_map(&state, &d.action);
            states.push(state);
            derivs.push(d);
            state = next;
        }
        // next_grads[t] = ∇V at s_{t+1} over the steps after t.
        let mut next_grads = vec![RealVector::zeros(env.state_dim()); settings.horizon];
        let mut grad = RealVector::zeros(env.state_dim());
        for t in (0..settings.horizon).rev() {
            next_grads[t] = grad.clone();
            grad = backward_step(&derivs[t].r_s, &derivs[t].t_s, &grad, None, gamma)?;
        }
        let mut terms = GradientTerms::zeros(p);
        let mut weight = 1.0;
        for t in 0..settings.horizon {
            let d = &derivs[t];
            accumulate(&mut terms.reward, policy, &states[t], &d.partial.r_a, weight)?;
            let det = pathwise_action_term(d, &next_grads[t], gamma * d.mixing)?;
            accumulate(&mut terms.deterministic, policy, &states[t], &det, weight)?;
            weight *= gamma;
        }
        trajectories.push(terms);
        returns.push(ret);
    }
    Ok(PolicyGradientEstimate::from_trajectories(trajectories, &returns, p))
}

/// The special case `f ≡ 0`: only the reward and kernel terms survive.
pub fn policy_gradient_stochastic<P: DeterministicPolicy + ?Sized>(
    env: &dyn MixedMdp,
    policy: &P,
    settings: &GradientSettings,
    rng: &mut dyn RngCore,
) -> Result<PolicyGradientEstimate> {
    settings.validate()?;
    let p = policy.num_params();
    let gamma = settings.gamma;
    let mut trajectories = Vec::with_capacity(settings.rollouts);
    let mut returns = Vec::with_capacity(settings.rollouts);
    for _ in 0..settings.rollouts {
        let mut state = env.reset(rng);
        let mut terms = GradientTerms::zeros(p);
        let mut weight = 1.0;
        let mut ret = 0.0;
        for t in 0..settings.horizon {
            let a = policy.act(&state)?;
            let jac = env.jacobians(&state, &a)?;
            let f = env.mixing_coeff(&state, &a);
            if f != 0.0 || jac.f_a.iter().any(|v| *v != 0.0) {
                return Err(Error::Unsupported(format!(
                    "{} takes its deterministic branch; use the general estimator",
                    env.id()
                )));
            }
            ret += weight * env.reward(&state, &a);
            accumulate(&mut terms.reward, policy, &state, &jac.r_a, weight)?;
            let remaining = settings.horizon - t - 1;
            let stoch = sample_kernel_terms(env, policy, &state, &a, remaining, settings, rng)?;
            if let Some(score_v) = stoch.score_value {
                accumulate(&mut terms.kernel, policy, &state, &score_v.scaled(gamma * (1.0 - f)), weight)?;
            }
            state = sample_transition(env, &state, &a, rng).0;
            weight *= gamma;
        }
        trajectories.push(terms);
        returns.push(ret);
    }
    Ok(PolicyGradientEstimate::from_trajectories(trajectories, &returns, p))
}

struct KernelSamples {
    /// `avg_j ∇_a log p(s'_j) V̂(s'_j)`; `None` when the kernel ignores `(s, a)`.
    score_value: Option<RealVector>,
    mean_value: f64,
}

fn sample_kernel_terms<P: DeterministicPolicy + ?Sized>(
    env: &dyn MixedMdp,
    policy: &P,
    s: &[f64],
    a: &[f64],
    remaining: usize,
    settings: &GradientSettings,
    rng: &mut dyn RngCore,
) -> Result<KernelSamples> {
    let m = settings.mc_next_states;
    let mut score_value: Option<RealVector> = None;
    let mut mean_value = 0.0;
    for _ in 0..m {
        let next = env.stochastic_sample(s, a, rng);
        let v = value_estimate(env, policy, &next, settings.gamma, remaining, settings.value_rollouts, rng)?;
        mean_value += v / m as f64;
        if let Some(score) = env.kernel_score(s, a, &next)? {
            score_value
                .get_or_insert_with(|| RealVector::zeros(a.len()))
                .axpy(v / m as f64, &score.a);
        }
    }
    Ok(KernelSamples {
        score_value,
        mean_value,
    })
}

/// All five terms under mixed dynamics.
///
/// At each visited state, in this rng order:
/// 1. when `f > 0` or `∇_a f ≠ 0`: `value_rollouts` continuations from
///    `T(s, a)` estimate `V` and `∇_s V` there;
/// 2. when `f < 1` or `∇_a f ≠ 0`: `mc_next_states` draws from `p` with
///    `V̂` each, feeding the kernel and stochastic mixing terms;
/// 3. the trajectory itself advances through the mixture.
///
/// Skipped steps leave their terms at zero, so with `f ≡ 1` this reproduces
/// [`policy_gradient_deterministic`] and with `f ≡ 0`
/// [`policy_gradient_stochastic`] exactly, for the same rng state.
pub fn policy_gradient_general<P: DeterministicPolicy + ?Sized>(
    env: &dyn MixedMdp,
    policy: &P,
    settings: &GradientSettings,
    rng: &mut dyn RngCore,
) -> Result<PolicyGradientEstimate> {
    settings.validate()?;
    let p = policy.num_params();
    let n = env.state_dim();
    let gamma = settings.gamma;
    let continuations = if env.is_deterministic() { 1 } else { settings.value_rollouts };
    let mut trajectories = Vec::with_capacity(settings.rollouts);
    let mut returns = Vec::with_capacity(settings.rollouts);
    for _ in 0..settings.rollouts {
        let mut state = env.reset(rng);
        let mut terms = GradientTerms::zeros(p);
        let mut weight = 1.0;
        let mut ret = 0.0;
        for t in 0..settings.horizon {
            let d = total_derivatives(env, policy, &state)?;
            let a = &d.action;
            let f = d.mixing;
            let f_moves = d.partial.f_a.iter().any(|v| *v != 0.0);
            ret += weight * env.reward(&state, a);
            let remaining = settings.horizon - t - 1;
            accumulate(&mut terms.reward, policy, &state, &d.partial.r_a, weight)?;

            if f > 0.0 || f_moves {
                let target = env.deterministic_map(&state, a);
                let mut v_hat = 0.0;
                let mut g_hat = RealVector::zeros(n);
                for _ in 0..continuations {
                    let (v, g) = sampled_value_and_grad(env, policy, &target, gamma, remaining, rng)?;
                    v_hat += v;
                    g_hat.axpy(1.0, &g);
                }
                if continuations > 1 {
                    v_hat /= continuations as f64;
                    g_hat = g_hat.scaled(1.0 / continuations as f64);
                }
                let det = pathwise_action_term(&d, &g_hat, gamma * f)?;
                accumulate(&mut terms.deterministic, policy, &state, &det, weight)?;
                if f_moves {
                    let mix = d.partial.f_a.scaled(gamma * v_hat);
                    accumulate(&mut terms.mixing_deterministic, policy, &state, &mix, weight)?;
                }
            }
            if f < 1.0 || f_moves {
                let stoch = sample_kernel_terms(env, policy, &state, a, remaining, settings, rng)?;
                if let Some(score_v) = stoch.score_value {
                    accumulate(&mut terms.kernel, policy, &state, &score_v.scaled(gamma * (1.0 - f)), weight)?;
                }
                if f_moves {
                    let mix = d.partial.f_a.scaled(-gamma * stoch.mean_value);
                    accumulate(&mut terms.mixing_stochastic, policy, &state, &mix, weight)?;
                }
            }
            state = sample_transition(env, &state, a, rng).0;
            weight *= gamma;
        }
        trajectories.push(terms);
        returns.push(ret);
    }
    Ok(PolicyGradientEstimate::from_trajectories(trajectories, &returns, p))
}

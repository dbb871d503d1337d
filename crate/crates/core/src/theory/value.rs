//! Value functions and their state gradients along fixed-horizon rollouts.
//!
//! Theory rollouts run for exactly `horizon` steps and ignore terminal sets,
//! so `V` and `J` here are truncated discounted sums.

use rand::RngCore;

use crate::env::{sample_transition, Branch, MixedMdp};
use crate::error::{Error, Result};
use crate::linalg::{RealMatrix, RealVector};
use crate::policy::DeterministicPolicy;

/// Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub samples: usize,
}

impl McEstimate {
    pub fn from_samples(values: &[f64]) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Self {
            mean,
            std_err: (var / n as f64).sqrt(),
            samples: n,
        }
    }
}

/// Derivatives of `T`, `r` and `f` along `s ↦ (s, μ(s))`, i.e. including the
/// policy's dependence on the state.
#[derive(Debug, Clone)]
pub(crate) struct TotalDerivatives {
    pub action: RealVector,
    pub t_s: RealMatrix,
    pub r_s: RealVector,
    pub f_s: RealVector,
    pub mixing: f64,
    pub partial: crate::env::Jacobians,
    pub policy_jacobian: RealMatrix,
}

pub(crate) fn total_derivatives<P: DeterministicPolicy + ?Sized>(
    env: &dyn MixedMdp,
    policy: &P,
    s: &[f64],
) -> Result<TotalDerivatives> {
    let action = policy.act(s)?;
    let partial = env.jacobians(s, &action)?;
    let policy_jacobian = policy.state_jacobian(s)?;
    let t_s = partial.t_s.add(&partial.t_a.matmul(&policy_jacobian)?)?;
    let mut r_s = partial.r_s.clone();
    r_s.axpy(1.0, &policy_jacobian.matvec_transposed(&partial.r_a)?);
    let mut f_s = partial.f_s.clone();
    f_s.axpy(1.0, &policy_jacobian.matvec_transposed(&partial.f_a)?);
    Ok(TotalDerivatives {
        mixing: env.mixing_coeff(s, &action),
        action,
        t_s,
        r_s,
        f_s,
        partial,
        policy_jacobian,
    })
}

/// One backward step of the value-gradient recursion,
/// `∇V(s) = ∇r + γ (J_sᵀ ∇V(s') + extra)`.
pub(crate) fn backward_step(r_s: &[f64], t_s: &RealMatrix, next_grad: &[f64], extra: Option<&[f64]>, gamma: f64) -> Result<RealVector> {
    let mut inner = t_s.matvec_transposed(next_grad)?;
    if let Some(e) = extra {
        inner.axpy(1.0, e);
    }
    let mut out = RealVector::from(r_s);
    out.axpy(gamma, &inner);
    Ok(out)
}

fn require_deterministic(env: &dyn MixedMdp) -> Result<()> {
    if env.is_deterministic() {
        Ok(())
    } else {
        Err(Error::Unsupported(format!(
            "{} mixes in a stochastic branch; the series form needs f ≡ 1",
            env.id()
        )))
    }
}

/// `Σ_{t<horizon} γᵗ g(s, t, μ) ∇r(s_t, μ(s_t))` along the deterministic rollout from `s`.
///
/// `g` multiplies the total state Jacobians of `s ↦ T(s, μ(s))`; evaluated by
/// the equivalent backward recursion.
pub fn series_grad_value<P: DeterministicPolicy + ?Sized>(
    env: &dyn MixedMdp,
    policy: &P,
    s: &[f64],
    gamma: f64,
    horizon: usize,
) -> Result<RealVector> {
    require_deterministic(env)?;
    if horizon == 0 {
        return Err(Error::InvalidConfig("series horizon must be at least 1".into()));
    }
    let mut derivs = Vec::with_capacity(horizon);
    let mut state = RealVector::from(s);
    for _ in 0..horizon {
        let d = total_derivatives(env, policy, &state)?;
        state = env.deterministic_map(&state, &d.action);
        derivs.push(d);
    }
    let mut grad = RealVector::zeros(s.len());
    for d in derivs.iter().rev() {
        grad = backward_step(&d.r_s, &d.t_s, &grad, None, gamma)?;
    }
    Ok(grad)
}

/// Truncated discounted return of the deterministic rollout from `s`.
pub fn deterministic_value<P: DeterministicPolicy + ?Sized>(
    env: &dyn MixedMdp,
    policy: &P,
    s: &[f64],
    gamma: f64,
    horizon: usize,
) -> Result<f64> {
    let mut state = RealVector::from(s);
    let mut total = 0.0;
    let mut discount = 1.0;
    for _ in 0..horizon {
        let a = policy.act(&state)?;
        total += discount * env.reward(&state, &a);
        state = env.deterministic_map(&state, &a);
        discount *= gamma;
    }
    Ok(total)
}

/// Discounted return of one sampled rollout of the mixed dynamics.
pub fn sampled_value<P: DeterministicPolicy + ?Sized>(
    env: &dyn MixedMdp,
    policy: &P,
    s: &[f64],
    gamma: f64,
    horizon: usize,
    rng: &mut dyn RngCore,
) -> Result<f64> {
    let mut state = RealVector::from(s);
    let mut total = 0.0;
    let mut discount = 1.0;
    for _ in 0..horizon {
        let a = policy.act(&state)?;
        total += discount * env.reward(&state, &a);
        state = sample_transition(env, &state, &a, rng).0;
        discount *= gamma;
    }
    Ok(total)
}

/// Average of `rollouts` sampled values; a single rollout is exact when `f ≡ 1`.
pub fn value_estimate<P: DeterministicPolicy + ?Sized>(
    env: &dyn MixedMdp,
    policy: &P,
    s: &[f64],
    gamma: f64,
    horizon: usize,
    rollouts: usize,
    rng: &mut dyn RngCore,
) -> Result<f64> {
    if env.is_deterministic() {
        return deterministic_value(env, policy, s, gamma, horizon);
    }
    let mut total = 0.0;
    for _ in 0..rollouts {
        total += sampled_value(env, policy, s, gamma, horizon, rng)?;
    }
    Ok(total / rollouts as f64)
}

/// Single-trajectory estimate of `(V(s), ∇_s V(s))` under mixed dynamics.
///
/// Deterministic steps propagate the gradient pathwise through `J_sᵀ` and add
/// the branch score `∇f/f · V(s')`; stochastic steps contribute the kernel
/// score `∇ log p · V(s')` and the branch score `-∇f/(1-f) · V(s')`. With
/// `f ≡ 1` this is exactly [`series_grad_value`].
pub fn sampled_value_and_grad<P: DeterministicPolicy + ?Sized>(
    env: &dyn MixedMdp,
    policy: &P,
    s: &[f64],
    gamma: f64,
    horizon: usize,
    rng: &mut dyn RngCore,
) -> Result<(f64, RealVector)> {
    struct StepRecord {
        reward: f64,
        derivs: TotalDerivatives,
        branch: Branch,
        score: Option<RealVector>,
    }
    let mut records = Vec::with_capacity(horizon);
    let mut state = RealVector::from(s);
    for _ in 0..horizon {
        let d = total_derivatives(env, policy, &state)?;
        let reward = env.reward(&state, &d.action);
        let (next, branch) = sample_transition(env, &state, &d.action, rng);
        let score = match branch {
            Branch::Deterministic => None,
            Branch::Stochastic => env.kernel_score(&state, &d.action, &next)?.map(|k| {
                let mut total = k.s;
                total.axpy(
                    1.0,
                    &d.policy_jacobian.matvec_transposed(&k.a).expect("policy jacobian shape"),
                );
                total
            }),
        };
        records.push(StepRecord {
            reward,
            derivs: d,
            branch,
            score,
        });
        state = next;
    }
    let mut value = 0.0;
    let mut grad = RealVector::zeros(s.len());
    for rec in records.iter().rev() {
        let d = &rec.derivs;
        let f_moves = d.f_s.iter().any(|v| *v != 0.0);
        grad = match rec.branch {
            Branch::Deterministic => {
                let extra = f_moves.then(|| d.f_s.scaled(value / d.mixing));
                backward_step(&d.r_s, &d.t_s, &grad, extra.as_deref(), gamma)?
            }
            Branch::Stochastic => {
                // The sampled state carries no pathwise dependence on s.
                let mut inner = RealVector::zeros(s.len());
                if let Some(score) = &rec.score {
                    inner.axpy(value, score);
                }
                if f_moves {
                    inner.axpy(-value / (1.0 - d.mixing), &d.f_s);
                }
                let mut out = d.r_s.clone();
                out.axpy(gamma, &inner);
                out
            }
        };
        value = rec.reward + gamma * value;
    }
    Ok((value, grad))
}

/// `J(μ) ≈ E_{s₀~p₀}[Σ_{t<horizon} γᵗ r_t]` under the true mixed dynamics.
pub fn mc_return<P: DeterministicPolicy + ?Sized>(
    env: &dyn MixedMdp,
    policy: &P,
    gamma: f64,
    episodes: usize,
    horizon: usize,
    rng: &mut dyn RngCore,
) -> Result<McEstimate> {
    if episodes == 0 {
        return Err(Error::InvalidConfig("at least one episode is required".into()));
    }
    let mut returns = Vec::with_capacity(episodes);
    for _ in 0..episodes {
        let s0 = env.reset(rng);
        returns.push(sampled_value(env, policy, &s0, gamma, horizon, rng)?);
    }
    Ok(McEstimate::from_samples(&returns))
}

/// `J*(μ)`: same rewards, transitions replaced by `T*(s, a) = E[s'|s, a]`.
pub fn mc_return_augmented<P: DeterministicPolicy + ?Sized>(
    env: &dyn MixedMdp,
    policy: &P,
    gamma: f64,
    episodes: usize,
    horizon: usize,
    rng: &mut dyn RngCore,
) -> Result<McEstimate> {
    if episodes == 0 {
        return Err(Error::InvalidConfig("at least one episode is required".into()));
    }
    let mut returns = Vec::with_capacity(episodes);
    for _ in 0..episodes {
        let mut state = env.reset(rng);
        let mut total = 0.0;
        let mut discount = 1.0;
        for _ in 0..horizon {
            let a = policy.act(&state)?;
            total += discount * env.reward(&state, &a);
            state = env.augmented_map(&state, &a)?;
            discount *= gamma;
        }
        returns.push(total);
    }
    Ok(McEstimate::from_samples(&returns))
}

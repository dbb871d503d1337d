//! Sampled checks of the discount threshold `1/(nc)` and of the two
//! conditions under which the value gradient exists at every discount.

use std::fmt::Write as _;

use rand::RngCore;

use crate::env::{sample_transition, MixedMdp};
use crate::error::{Error, Result};
use crate::linalg::{spectral_radius, RealMatrix};
use crate::numfmt::fmt_float;
use crate::policy::DeterministicPolicy;

/// Slack allowed on chain spectral radii before the second condition fails.
pub const SPECTRAL_SLACK: f64 = 1e-9;
const POWER_ITERS: usize = 2000;
const POWER_TOL: f64 = 1e-12;

/// Factors `f(sᵢ, μ(sᵢ)) ∇_s T(sᵢ, μ(sᵢ))` along one rollout and their running product.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianChain {
    pub matrices: Vec<RealMatrix>,
    /// `matrices[0] · matrices[1] · … · matrices[k-1]`.
    pub product: RealMatrix,
}

impl JacobianChain {
    pub fn new(dim: usize) -> Self {
        Self {
            matrices: Vec::new(),
            product: RealMatrix::identity(dim),
        }
    }

    pub fn from_matrices(matrices: Vec<RealMatrix>) -> Result<Self> {
        let dim = matrices.first().map_or(0, |m| m.rows());
        let mut chain = Self::new(dim);
        for m in matrices {
            chain.push(m)?;
        }
        Ok(chain)
    }

    pub fn push(&mut self, m: RealMatrix) -> Result<()> {
        self.product = self.product.matmul(&m)?;
        self.matrices.push(m);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub n: usize,
    /// Largest `‖∇_s T(s, μ(s))‖_max` over the sampled states.
    pub c: f64,
    /// `1/(nc)`; `+∞` when `c = 0`.
    pub gamma_threshold: f64,
    pub max_mixing: f64,
    /// `1/(nc) - max f`; nonnegative exactly when the first condition holds.
    pub cond_a1_margin: f64,
    pub cond_a1: bool,
    /// Largest spectral radius over every prefix product of every sampled chain.
    pub cond_a2_worst_radius: f64,
    pub cond_a2: bool,
    /// Every power iteration settled within its budget.
    pub spectral_converged: bool,
    pub samples_used: usize,
    pub chains: usize,
    pub chain_length: usize,
}

impl ConvergenceReport {
    /// `1/(nc · max f)`: with mixing, each factor of the series carries `f`.
    pub fn mixed_threshold(&self) -> f64 {
        let denom = self.n as f64 * self.c * self.max_mixing;
        if denom > 0.0 {
            1.0 / denom
        } else {
            f64::INFINITY
        }
    }

    /// The lemma's sufficient bound `γ < 1/(nc)`.
    pub fn lemma_bound_holds(&self, gamma: f64) -> bool {
        gamma < self.gamma_threshold
    }

    /// Existence is guaranteed by the discount bound or by either condition.
    pub fn existence_guaranteed(&self, gamma: f64) -> bool {
        self.lemma_bound_holds(gamma) || self.cond_a1 || self.cond_a2
    }

    /// Flat `key=value` lines, one per field.
    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k}={v}");
        };
        kv("n", self.n.to_string());
        kv("c", fmt_float(self.c));
        kv("gamma_threshold", fmt_float(self.gamma_threshold));
        kv("mixed_gamma_threshold", fmt_float(self.mixed_threshold()));
        kv("max_mixing", fmt_float(self.max_mixing));
        kv("cond_a1", self.cond_a1.to_string());
        kv("cond_a1_margin", fmt_float(self.cond_a1_margin));
        kv("cond_a2", self.cond_a2.to_string());
        kv("cond_a2_worst_radius", fmt_float(self.cond_a2_worst_radius));
        kv("spectral_converged", self.spectral_converged.to_string());
        kv("samples_used", self.samples_used.to_string());
        kv("chains", self.chains.to_string());
        kv("chain_length", self.chain_length.to_string());
        out
    }
}

/// Samples `chains` on-policy rollouts of `chain_length` steps from `p₀`.
///
/// Every visited state contributes to `c` and `max f`; every prefix product of
/// `f ∇_s T` along a rollout is tested against the spectral bound. Rollouts
/// follow the mixed dynamics, so this is a sampled semidecision, not a proof.
/// Each chain consumes the rng identically, so more chains under the same
/// seed only extend the sample set.
pub fn convergence_report<P: DeterministicPolicy + ?Sized>(
    env: &dyn MixedMdp,
    policy: &P,
    chains: usize,
    chain_length: usize,
    rng: &mut dyn RngCore,
) -> Result<ConvergenceReport> {
    if chains == 0 || chain_length == 0 {
        return Err(Error::InvalidConfig(
            "convergence report needs at least one chain of length one".into(),
        ));
    }
    let n = env.state_dim();
    let mut c: f64 = 0.0;
    let mut max_mixing: f64 = 0.0;
    let mut worst: f64 = 0.0;
    let mut spectral_converged = true;
    let mut samples_used = 0;
    for _ in 0..chains {
        let mut s = env.reset(rng);
        let mut chain = JacobianChain::new(n);
        for _ in 0..chain_length {
            let a = policy.act(&s)?;
            let jac = env.jacobians(&s, &a)?;
            let f = env.mixing_coeff(&s, &a);
            c = c.max(jac.t_s.max_norm());
            max_mixing = max_mixing.max(f);
            samples_used += 1;
            chain.push(jac.t_s.scaled(f))?;
            let est = spectral_radius(&chain.product, POWER_ITERS, POWER_TOL)?;
            worst = worst.max(est.radius);
            spectral_converged &= est.converged;
            s = sample_transition(env, &s, &a, rng).0;
        }
    }
    let gamma_threshold = if c > 0.0 { 1.0 / (n as f64 * c) } else { f64::INFINITY };
    let cond_a1_margin = gamma_threshold - max_mixing;
    Ok(ConvergenceReport {
        n,
        c,
        gamma_threshold,
        max_mixing,
        cond_a1_margin,
        cond_a1: max_mixing <= gamma_threshold,
        cond_a2_worst_radius: worst,
        cond_a2: worst <= 1.0 + SPECTRAL_SLACK,
        spectral_converged,
        samples_used,
        chains,
        chain_length,
    })
}

//! The two-dimensional linear system whose value gradient is a matrix
//! geometric series in `4γ`.

use crate::error::{ensure_dim, ensure_finite, Result};
use crate::linalg::{RealMatrix, RealVector};

/// Partial sums above this magnitude are reported as divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct Example1Series {
    pub partial_sum: RealVector,
    pub diverged: bool,
}

/// `-(I + Σ_{k=1..terms} γᵏ [[2^{2k-1}, 2^{2k-1}], [2^{2k-1}, 2^{2k-1}]]) θ`.
pub fn example1_grad_value(theta: &[f64], gamma: f64, terms: usize) -> Result<Example1Series> {
    ensure_dim("example 1 theta", 2, theta.len())?;
    ensure_finite("example 1 theta", theta)?;
    ensure_finite("example 1 gamma", &[gamma])?;
    let mut sum = RealMatrix::identity(2);
    // γᵏ 2^{2k-1}: starts at 2γ and grows by 4γ per term.
    let mut coeff = 2.0 * gamma;
    let mut diverged = false;
    for _ in 0..terms {
        for v in sum.as_mut_slice() {
            *v += coeff;
        }
        coeff *= 4.0 * gamma;
        if !diverged && sum.max_norm() * theta_scale(theta) > DIVERGENCE_THRESHOLD {
            diverged = true;
        }
    }
    let partial_sum = sum.matvec(theta)?.scaled(-1.0);
    diverged |= partial_sum.iter().any(|v| !v.is_finite() || v.abs() > DIVERGENCE_THRESHOLD);
    Ok(Example1Series { partial_sum, diverged })
}

// Entries of M θ are bounded by max|M| (|θ₁| + |θ₂|); this lets the loop flag
// blow-up before the final multiply overflows.
fn theta_scale(theta: &[f64]) -> f64 {
    theta.iter().map(|v| v.abs()).sum()
}

/// Outcome of a series convergence test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesVerdict {
    Converged,
    Diverged,
}

impl SeriesVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            SeriesVerdict::Converged => "converged",
            SeriesVerdict::Diverged => "diverged",
        }
    }
}

/// Compares the partial sums at `terms` and `2 * terms` with `θ = (1, 1)`.
///
/// Converged means the two agree to `1e-9` relative; anything else, including
/// the linear growth at `γ = 1/4`, is divergence.
pub fn example1_verdict(gamma: f64, terms: usize) -> Result<SeriesVerdict> {
    let theta = [1.0, 1.0];
    let short = example1_grad_value(&theta, gamma, terms)?;
    let long = example1_grad_value(&theta, gamma, 2 * terms)?;
    if short.diverged || long.diverged {
        return Ok(SeriesVerdict::Diverged);
    }
    let settled = short
        .partial_sum
        .iter()
        .zip(long.partial_sum.iter())
        .all(|(a, b)| (a - b).abs() <= 1e-9 * (1.0 + b.abs()));
    Ok(if settled {
        SeriesVerdict::Converged
    } else {
        SeriesVerdict::Diverged
    })
}

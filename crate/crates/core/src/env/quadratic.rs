use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use super::{uniform_box, Jacobians, KernelScore, MixedMdp};
use crate::error::{Error, Result};
use crate::linalg::{RealMatrix, RealVector};

/// Sign of the quadratic reward.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Curvature {
    /// `r = sᵀQs + aᵀRa`: every linear policy has a convex value function.
    Convex,
    /// `r = -(sᵀQs + aᵀRa)`: values are concave and the ordering of `J` and `J*` flips.
    Concave,
}

/// Linear dynamics with Gaussian noise on the stochastic branch.
///
/// `T(s, a) = As + Ba`; with probability `1 - f` the next state is drawn from
/// `N(As + Ba, σ²I)`, so `E[s'|s, a] = T(s, a)`. `A` is scaled to spectral norm below one.
#[derive(Debug, Clone)]
pub struct QuadraticConvexEnv {
    pub a: RealMatrix,
    pub b: RealMatrix,
    pub q: RealMatrix,
    pub r: RealMatrix,
    pub mixing: f64,
    pub noise_std: f64,
    pub curvature: Curvature,
    pub max_steps: usize,
    low: Vec<f64>,
    high: Vec<f64>,
}

impl Default for QuadraticConvexEnv {
    fn default() -> Self {
        Self::new(3, 0.5, 0.3, Curvature::Convex).expect("default configuration is valid")
    }
}

impl QuadraticConvexEnv {
    pub fn new(dim: usize, mixing: f64, noise_std: f64, curvature: Curvature) -> Result<Self> {
        if dim == 0 || !(0.0..=1.0).contains(&mixing) || noise_std <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "quadratic env needs dim > 0, mixing in [0, 1], noise_std > 0 (got {dim}, {mixing}, {noise_std})"
            )));
        }
        let m = RealMatrix::from_fn(dim, dim, |i, j| {
            let diag = if i == j { 0.5 } else { 0.0 };
            diag + 0.3 * ((i + 2 * j + 1) as f64).sin()
        });
        let frob = crate::linalg::norm(m.as_slice());
        // Frobenius norm bounds the spectral norm, so this keeps ‖A‖₂ ≤ 0.9.
        let a = m.scaled(0.9 / frob);
        let q = RealMatrix::diagonal(&(0..dim).map(|i| 1.0 / (i as f64 + 1.0)).collect::<Vec<_>>());
        Ok(Self {
            a,
            b: RealMatrix::identity(dim).scaled(0.5),
            q,
            r: RealMatrix::identity(dim).scaled(0.1),
            mixing,
            noise_std,
            curvature,
            max_steps: 100,
            low: vec![f64::NEG_INFINITY; dim],
            high: vec![f64::INFINITY; dim],
        })
    }

    fn sign(&self) -> f64 {
        match self.curvature {
            Curvature::Convex => 1.0,
            Curvature::Concave => -1.0,
        }
    }

    fn mean(&self, s: &[f64], a: &[f64]) -> RealVector {
        let mut m = self.a.matvec(s).expect("state dim checked");
        m.axpy(1.0, &self.b.matvec(a).expect("action dim checked"));
        m
    }
}

impl MixedMdp for QuadraticConvexEnv {
    fn id(&self) -> &str {
        "quadratic_convex"
    }

    fn state_dim(&self) -> usize {
        self.a.rows()
    }

    fn action_dim(&self) -> usize {
        self.b.cols()
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
        uniform_box(self.state_dim(), 1.0, rng)
    }

    fn deterministic_map(&self, s: &[f64], a: &[f64]) -> RealVector {
        self.mean(s, a)
    }

    fn mixing_coeff(&self, _s: &[f64], _a: &[f64]) -> f64 {
        self.mixing
    }

    fn stochastic_sample(&self, s: &[f64], a: &[f64], rng: &mut dyn RngCore) -> RealVector {
        let mut out = self.mean(s, a);
        for v in out.iter_mut() {
            let z: f64 = StandardNormal.sample(rng);
            *v += self.noise_std * z;
        }
        out
    }

    fn stochastic_mean(&self, s: &[f64], a: &[f64]) -> RealVector {
        self.mean(s, a)
    }

    fn reward(&self, s: &[f64], a: &[f64]) -> f64 {
        let qs = self.q.matvec(s).expect("state dim checked");
        let ra = self.r.matvec(a).expect("action dim checked");
        self.sign() * (qs.dot(s) + ra.dot(a))
    }

    fn is_deterministic(&self) -> bool {
        self.mixing >= 1.0
    }

    fn jacobians(&self, s: &[f64], a: &[f64]) -> Result<Jacobians> {
        let c = 2.0 * self.sign();
        Ok(Jacobians {
            t_s: self.a.clone(),
            t_a: self.b.clone(),
            r_s: self.q.matvec(s)?.scaled(c),
            r_a: self.r.matvec(a)?.scaled(c),
            f_s: RealVector::zeros(self.state_dim()),
            f_a: RealVector::zeros(self.action_dim()),
        })
    }

    fn kernel_score(&self, s: &[f64], a: &[f64], next: &[f64]) -> Result<Option<KernelScore>> {
        let mean = self.mean(s, a);
        let var = self.noise_std * self.noise_std;
        let resid: Vec<f64> = next.iter().zip(mean.iter()).map(|(x, m)| (x - m) / var).collect();
        Ok(Some(KernelScore {
            s: self.a.matvec_transposed(&resid)?,
            a: self.b.matvec_transposed(&resid)?,
        }))
    }
}

//! Deterministic policies `μ_θ(s)` with the derivatives the gradient estimators need.

use crate::error::{ensure_dim, Error, Result};
use crate::linalg::{RealMatrix, RealVector};
use crate::mlp::MlpParams;

/// A parameterized deterministic policy.
pub trait DeterministicPolicy {
    fn action_dim(&self) -> usize;
    fn act(&self, s: &[f64]) -> Result<RealVector>;
    /// `∂μ/∂s`, shape `action_dim x state_dim`.
    fn state_jacobian(&self, s: &[f64]) -> Result<RealMatrix>;
    fn num_params(&self) -> usize;
    fn params(&self) -> Vec<f64>;
    fn set_params(&mut self, params: &[f64]) -> Result<()>;
    /// `∇_θ μ(s) · u` as a flat parameter vector.
    fn param_vjp(&self, s: &[f64], upstream: &[f64]) -> Result<Vec<f64>>;
}

/// The policies the theory module evaluates.
#[derive(Debug, Clone, PartialEq)]
pub enum FixedPolicy {
    /// `μ(s) = θ` for every state.
    Constant(RealVector),
    /// `μ(s) = K s`.
    Linear(RealMatrix),
    Mlp(MlpParams),
}

impl DeterministicPolicy for FixedPolicy {
    fn action_dim(&self) -> usize {
        match self {
            FixedPolicy::Constant(theta) => theta.dim(),
            FixedPolicy::Linear(k) => k.rows(),
            FixedPolicy::Mlp(net) => net.output_dim(),
        }
    }

    fn act(&self, s: &[f64]) -> Result<RealVector> {
        match self {
            FixedPolicy::Constant(theta) => Ok(theta.clone()),
            FixedPolicy::Linear(k) => k.matvec(s),
            FixedPolicy::Mlp(net) => net.predict(s),
        }
    }

    fn state_jacobian(&self, s: &[f64]) -> Result<RealMatrix> {
        match self {
            FixedPolicy::Constant(theta) => Ok(RealMatrix::zeros(theta.dim(), s.len())),
            FixedPolicy::Linear(k) => {
                ensure_dim("linear policy state", k.cols(), s.len())?;
                Ok(k.clone())
            }
            FixedPolicy::Mlp(net) => net.input_jacobian(s),
        }
    }

    fn num_params(&self) -> usize {
        match self {
            FixedPolicy::Constant(theta) => theta.dim(),
            FixedPolicy::Linear(k) => k.rows() * k.cols(),
            FixedPolicy::Mlp(net) => net.num_params(),
        }
    }

    fn params(&self) -> Vec<f64> {
        match self {
            FixedPolicy::Constant(theta) => theta.to_vec(),
            FixedPolicy::Linear(k) => k.as_slice().to_vec(),
            FixedPolicy::Mlp(net) => net.to_flat(),
        }
    }

    fn set_params(&mut self, params: &[f64]) -> Result<()> {
        ensure_dim("policy parameters", self.num_params(), params.len())?;
        match self {
            FixedPolicy::Constant(theta) => theta.copy_from_slice(params),
            FixedPolicy::Linear(k) => k.as_mut_slice().copy_from_slice(params),
            FixedPolicy::Mlp(net) => net.set_flat(params)?,
        }
        Ok(())
    }

    fn param_vjp(&self, s: &[f64], upstream: &[f64]) -> Result<Vec<f64>> {
        ensure_dim("policy upstream", self.action_dim(), upstream.len())?;
        match self {
            FixedPolicy::Constant(_) => Ok(upstream.to_vec()),
            FixedPolicy::Linear(k) => {
                ensure_dim("linear policy state", k.cols(), s.len())?;
                let mut out = Vec::with_capacity(k.rows() * k.cols());
                for u in upstream {
                    out.extend(s.iter().map(|x| u * x));
                }
                Ok(out)
            }
            FixedPolicy::Mlp(net) => {
                let (_, cache) = net.forward(s)?;
                Ok(net.grad_params(&cache, upstream)?.to_flat())
            }
        }
    }
}

impl FixedPolicy {
    /// Constant policy at the upper corner of a bounded action box.
    pub fn corner(high: &[f64]) -> Result<Self> {
        if high.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("corner policy needs a bounded action box".into()));
        }
        Ok(FixedPolicy::Constant(RealVector::from(high)))
    }

    pub fn as_mlp(&self) -> Option<&MlpParams> {
        match self {
            FixedPolicy::Mlp(net) => Some(net),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlp::OutputActivation;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fd_check(policy: &FixedPolicy, s: &[f64], u: &[f64]) {
        let grad = policy.param_vjp(s, u).unwrap();
        let theta = policy.params();
        let h = 1e-6;
        for i in 0..theta.len() {
            let mut p = policy.clone();
            let mut t = theta.clone();
            t[i] += h;
            p.set_params(&t).unwrap();
            let plus = p.act(s).unwrap().dot(u);
            t[i] -= 2.0 * h;
            p.set_params(&t).unwrap();
            let minus = p.act(s).unwrap().dot(u);
            assert!(((plus - minus) / (2.0 * h) - grad[i]).abs() < 1e-7);
        }
    }

    #[test]
    fn vjp_matches_finite_differences() {
        let s = [0.3, -0.7];
        let u = [1.5, -0.5];
        fd_check(&FixedPolicy::Constant(RealVector::new(vec![0.1, 0.2])), &s, &u);
        fd_check(&FixedPolicy::Linear(RealMatrix::from_rows(&[&[1.0, 2.0], &[0.5, -1.0]])), &s, &u);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let net = MlpParams::random(&[2, 4, 2], OutputActivation::Squash { scale: 0.1 }, &mut rng).unwrap();
        fd_check(&FixedPolicy::Mlp(net), &s, &u);
    }

    #[test]
    fn constant_policy_has_zero_state_jacobian() {
        let p = FixedPolicy::Constant(RealVector::new(vec![1.0, 1.0]));
        assert_eq!(p.state_jacobian(&[3.0, 4.0]).unwrap().max_norm(), 0.0);
        assert_eq!(&*p.act(&[3.0, 4.0]).unwrap(), &[1.0, 1.0]);
    }

    #[test]
    fn corner_requires_bounded_box() {
        assert!(FixedPolicy::corner(&[f64::INFINITY]).is_err());
        assert_eq!(FixedPolicy::corner(&[0.1, 0.1]).unwrap().params(), vec![0.1, 0.1]);
    }
}

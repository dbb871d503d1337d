//! Existence theory for deterministic policy gradients, made numeric.

mod convergence;
mod example1;
mod policy_gradient;
mod value;

pub use convergence::{convergence_report, ConvergenceReport, JacobianChain, SPECTRAL_SLACK};
pub use example1::{example1_grad_value, example1_verdict, Example1Series, SeriesVerdict, DIVERGENCE_THRESHOLD};
pub use policy_gradient::{
    policy_gradient_deterministic, policy_gradient_general, policy_gradient_stochastic, GradientSettings,
    GradientTerms, PolicyGradientEstimate,
};
pub use value::{
    deterministic_value, mc_return, mc_return_augmented, sampled_value, sampled_value_and_grad, series_grad_value,
    value_estimate, McEstimate,
};

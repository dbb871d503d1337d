//! Deterministic policy gradients under transitions that mix a deterministic
//! map with a stochastic kernel.
//!
//! The crate has four layers:
//!
//! * [`linalg`], [`mlp`], [`adam`]: dense arithmetic and small networks with
//!   explicit backprop.
//! * [`env`]: environments exposing `T`, `f`, `p`, `r` and their derivatives.
//! * [`theory`]: convergence thresholds, closed-form policy gradients and
//!   Monte-Carlo checks of the value-gradient series.
//! * [`agent`] and [`harness`]: the GDPG trainer (DDPG and MDPG as special
//!   cases) and the seeded experiment runner that writes CSV results.

pub mod adam;
pub mod agent;
pub mod env;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod mlp;
pub mod numfmt;
pub mod policy;
pub mod theory;

pub use error::{Error, Result};

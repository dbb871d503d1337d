//! The GDPG trainer: an actor ascending `(1 − α) ∇J* + α ∇J`, where `J*` is
//! the return of the expected-transition MDP learned through `T̂`.
//!
//! `α = 1` (mode `ddpg`) is plain DDPG and `α = 0` the purely model-based
//! ascent (modes `mdpg` and `augmented_only`).

mod buffer;
mod checkpoint;
mod config;
mod noise;
mod trainer;

pub use buffer::{Batch, ReplayBuffer};
pub use checkpoint::{load_actor, read_checkpoint, write_checkpoint, STATE_NETWORKS};
pub use config::{GdpgConfig, Mode};
pub use noise::{NoiseConfig, NoiseProcess};
pub use trainer::{soft_update, train, train_records, GdpgState, Losses, RunRecord};

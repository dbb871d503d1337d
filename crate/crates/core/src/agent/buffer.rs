//! FIFO experience replay with uniform minibatches.

use rand::seq::index::sample;
use rand::Rng;

use crate::error::{ensure_dim, Error, Result};
use crate::linalg::RealMatrix;

/// A minibatch laid out row-per-transition for the batched network passes.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub states: RealMatrix,
    pub actions: RealMatrix,
    pub rewards: Vec<f64>,
    pub next_states: RealMatrix,
    /// 1.0 for transitions into the terminal set, 0.0 otherwise.
    pub dones: Vec<f64>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }
}

/// Ring buffer of `(s, a, r, s', done)` stored in flat arrays.
///
/// Storage grows on demand up to `capacity`; after that each insert
/// overwrites the oldest entry.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    state_dim: usize,
    action_dim: usize,
    states: Vec<f64>,
    actions: Vec<f64>,
    rewards: Vec<f64>,
    next_states: Vec<f64>,
    dones: Vec<f64>,
    /// Slot the next insert writes to once the buffer is full.
    head: usize,
    inserted: u64,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, state_dim: usize, action_dim: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidConfig("replay capacity must be positive".into()));
        }
        Ok(Self {
            capacity,
            state_dim,
            action_dim,
            states: Vec::new(),
            actions: Vec::new(),
            rewards: Vec::new(),
            next_states: Vec::new(),
            dones: Vec::new(),
            head: 0,
            inserted: 0,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    /// Total inserts so far, including evicted ones.
    pub fn inserted(&self) -> u64 {
        self.inserted
    }

    pub fn push(&mut self, s: &[f64], a: &[f64], r: f64, next: &[f64], done: bool) -> Result<()> {
        ensure_dim("buffer state", self.state_dim, s.len())?;
        ensure_dim("buffer action", self.action_dim, a.len())?;
        ensure_dim("buffer next state", self.state_dim, next.len())?;
        let d = if done { 1.0 } else { 0.0 };
        if self.len() < self.capacity {
            self.states.extend_from_slice(s);
            self.actions.extend_from_slice(a);
            self.rewards.push(r);
            self.next_states.extend_from_slice(next);
            self.dones.push(d);
        } else {
            let i = self.head;
            let (n, m) = (self.state_dim, self.action_dim);
            self.states[i * n..(i + 1) * n].copy_from_slice(s);
            self.actions[i * m..(i + 1) * m].copy_from_slice(a);
            self.rewards[i] = r;
            self.next_states[i * n..(i + 1) * n].copy_from_slice(next);
            self.dones[i] = d;
            self.head = (self.head + 1) % self.capacity;
        }
        self.inserted += 1;
        Ok(())
    }

    /// Reward stored in slot order, oldest surviving entry first.
    pub fn rewards_oldest_first(&self) -> Vec<f64> {
        let mut out = self.rewards[self.head..].to_vec();
        out.extend_from_slice(&self.rewards[..self.head]);
        out
    }

    /// `batch_size` distinct entries chosen uniformly.
    pub fn sample<R: Rng + ?Sized>(&self, batch_size: usize, rng: &mut R) -> Result<Batch> {
        if batch_size == 0 || batch_size > self.len() {
            return Err(Error::InvalidConfig(format!(
                "cannot draw {batch_size} distinct transitions from {} stored",
                self.len()
            )));
        }
        let idx = sample(rng, self.len(), batch_size);
        let (n, m) = (self.state_dim, self.action_dim);
        let mut states = Vec::with_capacity(batch_size * n);
        let mut actions = Vec::with_capacity(batch_size * m);
        let mut rewards = Vec::with_capacity(batch_size);
        let mut next_states = Vec::with_capacity(batch_size * n);
        let mut dones = Vec::with_capacity(batch_size);
        for i in idx.iter() {
            states.extend_from_slice(&self.states[i * n..(i + 1) * n]);
            actions.extend_from_slice(&self.actions[i * m..(i + 1) * m]);
            rewards.push(self.rewards[i]);
            next_states.extend_from_slice(&self.next_states[i * n..(i + 1) * n]);
            dones.push(self.dones[i]);
        }
        Ok(Batch {
            states: RealMatrix::from_vec(batch_size, n, states)?,
            actions: RealMatrix::from_vec(batch_size, m, actions)?,
            rewards,
            next_states: RealMatrix::from_vec(batch_size, n, next_states)?,
            dones,
        })
    }
}

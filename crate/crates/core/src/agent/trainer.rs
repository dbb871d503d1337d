use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::buffer::{Batch, ReplayBuffer};
use super::config::GdpgConfig;
use super::noise::NoiseProcess;
use crate::adam::{adam_step, AdamState};
use crate::env::{clip_action, MixedMdp};
use crate::error::{ensure_finite, Error, Result};
use crate::linalg::{RealMatrix, RealVector};
use crate::mlp::{hconcat, BatchCache, MlpParams, OutputActivation};

/// One finished episode.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub seed: u64,
    pub episode: u64,
    /// Environment steps consumed when the episode ended.
    pub steps: u64,
    pub episode_return: f64,
    /// Mean return of the last `min(100, episode + 1)` episodes, this one included.
    pub rolling100: f64,
}

/// Losses from one update step; `None` where the mode skips that network.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Losses {
    pub critic: Option<f64>,
    pub augmented_critic: Option<f64>,
    pub transition: Option<f64>,
    pub actor_grad_norm: f64,
}

const INIT_STREAM: u64 = 0;
const ENV_STREAM: u64 = 1;
const NOISE_STREAM: u64 = 2;
const BATCH_STREAM: u64 = 3;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Everything a GDPG run owns: networks, optimizers, targets, replay and rngs.
#[derive(Debug, Clone)]
pub struct GdpgState {
    pub config: GdpgConfig,
    pub actor: MlpParams,
    pub critic: MlpParams,
    pub augmented_critic: MlpParams,
    pub transition: MlpParams,
    pub actor_target: MlpParams,
    pub critic_target: MlpParams,
    pub augmented_target: MlpParams,
    pub actor_opt: AdamState,
    pub critic_opt: AdamState,
    pub augmented_opt: AdamState,
    pub transition_opt: AdamState,
    pub buffer: ReplayBuffer,
    pub noise: NoiseProcess,
    state_dim: usize,
    action_dim: usize,
    low: Vec<f64>,
    high: Vec<f64>,
    /// Per-dimension half-width used to scale noise; 1 for unbounded actions.
    noise_scale: Vec<f64>,
    env_rng: ChaCha8Rng,
    noise_rng: ChaCha8Rng,
    batch_rng: ChaCha8Rng,
    /// Environment steps taken so far.
    pub steps: u64,
    pub last_losses: Losses,
}

impl GdpgState {
    /// Initializes all four online networks from the seed's init stream (in
    /// the order actor, critic, augmented critic, transition) whatever the
    /// mode, so modes that share a seed start from identical weights.
    pub fn new(env: &dyn MixedMdp, config: GdpgConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let n = env.state_dim();
        let m = env.action_dim();
        let low = env.action_low().to_vec();
        let high = env.action_high().to_vec();
        let bounded = low.iter().chain(&high).all(|v| v.is_finite());
        let output = if bounded {
            let scale = high[0];
            let symmetric = (0..m).all(|i| high[i] == scale && low[i] == -scale);
            if !symmetric || scale <= 0.0 {
                return Err(Error::InvalidConfig(
                    "bounded action boxes must be symmetric and equal across dimensions".into(),
                ));
            }
            OutputActivation::Squash { scale }
        } else {
            OutputActivation::Identity
        };
        let noise_scale = (0..m)
            .map(|i| if bounded { 0.5 * (high[i] - low[i]) } else { 1.0 })
            .collect();
        let h = config.hidden;
        let mut init = stream(seed, INIT_STREAM);
        let actor = MlpParams::random(&[n, h, h, m], output, &mut init)?;
        let critic = MlpParams::random(&[n + m, h, h, 1], OutputActivation::Identity, &mut init)?;
        let augmented_critic = MlpParams::random(&[n + m, h, h, 1], OutputActivation::Identity, &mut init)?;
        let transition = MlpParams::random(&[n + m, h, h, n], OutputActivation::Identity, &mut init)?;
        Ok(Self {
            actor_opt: AdamState::new(&actor, config.actor_lr),
            critic_opt: AdamState::new(&critic, config.critic_lr),
            augmented_opt: AdamState::new(&augmented_critic, config.critic_lr),
            transition_opt: AdamState::new(&transition, config.transition_lr),
            actor_target: actor.clone(),
            critic_target: critic.clone(),
            augmented_target: augmented_critic.clone(),
            buffer: ReplayBuffer::new(config.buffer_capacity, n, m)?,
            noise: NoiseProcess::new(config.noise, m),
            actor,
            critic,
            augmented_critic,
            transition,
            state_dim: n,
            action_dim: m,
            low,
            high,
            noise_scale,
            env_rng: stream(seed, ENV_STREAM),
            noise_rng: stream(seed, NOISE_STREAM),
            batch_rng: stream(seed, BATCH_STREAM),
            steps: 0,
            last_losses: Losses::default(),
            config,
        })
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    /// `μ(s)`, plus scaled exploration noise when `explore`, clipped to the box.
    pub fn select_action(&mut self, s: &[f64], explore: bool) -> Result<RealVector> {
        ensure_finite("observation", s)?;
        let mut a = self.actor.predict(s)?;
        if explore {
            let eps = self.noise.sample(&mut self.noise_rng);
            for ((ai, e), k) in a.iter_mut().zip(&eps).zip(&self.noise_scale) {
                *ai += k * e;
            }
        }
        clip_action(&mut a, &self.low, &self.high);
        Ok(a)
    }

    /// Uniform over the box (over `[-1, 1]` per unbounded dimension).
    pub fn random_action(&mut self) -> RealVector {
        let rng = &mut self.noise_rng;
        RealVector::new(
            self.low
                .iter()
                .zip(&self.high)
                .map(|(&lo, &hi)| {
                    if lo.is_finite() && hi.is_finite() {
                        rng.random_range(lo..=hi)
                    } else {
                        rng.random_range(-1.0..=1.0)
                    }
                })
                .collect(),
        )
    }

    /// Draws a minibatch from the replay buffer with the batch stream.
    pub fn sample_batch(&mut self) -> Result<Batch> {
        self.buffer.sample(self.config.batch_size, &mut self.batch_rng)
    }

    /// One Adam step on `Q` towards `y = r + γ(1 − done) Q'(s', μ'(s'))`; returns the pre-step loss.
    pub fn critic_update(&mut self, batch: &Batch) -> Result<f64> {
        let targets = self.bootstrap_targets(batch, &batch.next_states, &self.critic_target)?;
        regress(&mut self.critic, &mut self.critic_opt, batch, &targets)
    }

    /// One Adam step on `Q*` towards `y' = r + γ(1 − done) Q*'(T̂(s, a), μ'(T̂(s, a)))`.
    pub fn augmented_critic_update(&mut self, batch: &Batch) -> Result<f64> {
        let inputs = hconcat(&batch.states, &batch.actions)?;
        let predicted = self.transition.predict_batch(&inputs)?;
        self.augmented_update_with(batch, &predicted)
    }

    fn augmented_update_with(&mut self, batch: &Batch, predicted_next: &RealMatrix) -> Result<f64> {
        let targets = self.bootstrap_targets(batch, predicted_next, &self.augmented_target)?;
        regress(&mut self.augmented_critic, &mut self.augmented_opt, batch, &targets)
    }

    /// One Adam step on `T̂` for `L3 + l2 ‖θ‖²`; returns the unregularized `L3`.
    pub fn transition_update(&mut self, batch: &Batch) -> Result<f64> {
        let inputs = hconcat(&batch.states, &batch.actions)?;
        let cache = self.transition.forward_batch(&inputs)?;
        self.transition_update_with(batch, &cache)
    }

    fn transition_update_with(&mut self, batch: &Batch, cache: &BatchCache) -> Result<f64> {
        let n = batch.len() as f64;
        let pred = cache.output();
        let mut upstream = pred.clone();
        let mut loss = 0.0;
        for (u, &target) in upstream.as_mut_slice().iter_mut().zip(batch.next_states.as_slice()) {
            let e = *u - target;
            loss += e * e;
            *u = 2.0 * e / n;
        }
        loss /= n;
        let (grad, _) = self.transition.backward_batch(cache, &upstream, true, false)?;
        let mut grad = grad.expect("requested parameter gradient");
        if self.config.transition_l2_coeff > 0.0 {
            grad.add_scaled(2.0 * self.config.transition_l2_coeff, &self.transition)?;
        }
        ensure_finite("transition loss", &[loss])?;
        adam_step(&mut self.transition, &grad, &mut self.transition_opt)?;
        Ok(loss)
    }

    fn bootstrap_targets(&self, batch: &Batch, next_states: &RealMatrix, target_critic: &MlpParams) -> Result<Vec<f64>> {
        let gamma = self.config.gamma;
        let next_actions = self.actor_target.predict_batch(next_states)?;
        let q_next = target_critic.predict_batch(&hconcat(next_states, &next_actions)?)?;
        Ok((0..batch.len())
            .map(|i| batch.rewards[i] + gamma * (1.0 - batch.dones[i]) * q_next[(i, 0)])
            .collect())
    }

    /// Batch mean of `α ∇_θμ ∇_a Q + (1 − α) ∇_θμ ∇_a Q*` at `a = μ(s)`.
    ///
    /// Each critic's contribution is backpropagated separately and the two
    /// are combined afterwards, so the result is exactly linear in `α`; a
    /// zero coefficient skips that critic entirely.
    pub fn actor_gradient(&self, states: &RealMatrix, alpha: f64) -> Result<MlpParams> {
        let cache = self.actor.forward_batch(states)?;
        let inputs = hconcat(states, cache.output())?;
        let mut total: Option<MlpParams> = None;
        for (coeff, critic) in [(alpha, &self.critic), (1.0 - alpha, &self.augmented_critic)] {
            if coeff == 0.0 {
                continue;
            }
            let d_action = self.action_gradient(&inputs, critic)?;
            let (g, _) = self.actor.backward_batch(&cache, &d_action, true, false)?;
            let g = g.expect("requested parameter gradient");
            match total.as_mut() {
                None => {
                    let mut g = g;
                    if coeff != 1.0 {
                        g.scale(coeff);
                    }
                    total = Some(g);
                }
                Some(t) => t.add_scaled(coeff, &g)?,
            }
        }
        Ok(total.unwrap_or_else(|| self.actor.zeros_like()))
    }

    /// `∇_a Q(s, a) / rows` for every row of `[s | a]`.
    fn action_gradient(&self, inputs: &RealMatrix, critic: &MlpParams) -> Result<RealMatrix> {
        let rows = inputs.rows();
        let n = self.state_dim;
        let q_cache = critic.forward_batch(inputs)?;
        let upstream = RealMatrix::from_vec(rows, 1, vec![1.0 / rows as f64; rows])?;
        let (_, d_input) = critic.backward_batch(&q_cache, &upstream, false, true)?;
        let d_input = d_input.expect("requested input gradient");
        Ok(RealMatrix::from_fn(rows, self.action_dim, |i, j| d_input[(i, n + j)]))
    }

    /// Ascent step on the actor; returns the norm of the applied gradient.
    pub fn actor_update(&mut self, batch: &Batch) -> Result<f64> {
        let mut grad = self.actor_gradient(&batch.states, self.config.effective_alpha())?;
        let norm = grad.squared_norm().sqrt();
        grad.scale(-1.0);
        adam_step(&mut self.actor, &grad, &mut self.actor_opt)?;
        Ok(norm)
    }

    /// `θ' ← τθ + (1 − τ)θ'` for the actor and critic targets (and `Q*'`
    /// when the auxiliary networks train).
    pub fn soft_update_targets(&mut self) {
        let tau = self.config.tau;
        soft_update(&mut self.actor_target, &self.actor, tau);
        soft_update(&mut self.critic_target, &self.critic, tau);
        if self.config.trains_auxiliary() {
            soft_update(&mut self.augmented_target, &self.augmented_critic, tau);
        }
    }

    /// All per-step updates on one shared minibatch, in algorithm order:
    /// `Q`, `Q*`, `T̂`, actor, targets.
    pub fn update(&mut self, batch: &Batch) -> Result<Losses> {
        let mut losses = Losses::default();
        if self.config.trains_critic() {
            losses.critic = Some(self.critic_update(batch)?);
        }
        if self.config.trains_auxiliary() {
            let inputs = hconcat(&batch.states, &batch.actions)?;
            let cache = self.transition.forward_batch(&inputs)?;
            losses.augmented_critic = Some(self.augmented_update_with(batch, cache.output())?);
            losses.transition = Some(self.transition_update_with(batch, &cache)?);
        }
        losses.actor_grad_norm = self.actor_update(batch)?;
        self.soft_update_targets();
        self.last_losses = losses;
        Ok(losses)
    }
}

fn regress(net: &mut MlpParams, opt: &mut AdamState, batch: &Batch, targets: &[f64]) -> Result<f64> {
    let inputs = hconcat(&batch.states, &batch.actions)?;
    let cache = net.forward_batch(&inputs)?;
    let n = batch.len() as f64;
    let mut upstream = cache.output().clone();
    let mut loss = 0.0;
    for (u, &y) in upstream.as_mut_slice().iter_mut().zip(targets) {
        let e = *u - y;
        loss += e * e;
        *u = 2.0 * e / n;
    }
    loss /= n;
    ensure_finite("critic loss", &[loss])?;
    let (grad, _) = net.backward_batch(&cache, &upstream, true, false)?;
    adam_step(net, &grad.expect("requested parameter gradient"), opt)?;
    Ok(loss)
}

/// `target += τ (online − target)`; exact copy at `τ = 1` and a no-op when equal.
pub fn soft_update(target: &mut MlpParams, online: &MlpParams, tau: f64) {
    for (t, o) in target.param_slices_mut().into_iter().zip(online.param_slices()) {
        if tau == 1.0 {
            t.copy_from_slice(o);
        } else {
            for (ti, oi) in t.iter_mut().zip(o) {
                *ti += tau * (oi - *ti);
            }
        }
    }
}

/// Runs one seeded training run, handing each finished episode to `on_record`.
///
/// Episodes end on entering the terminal set or at the environment's step
/// limit; only the former stops bootstrapping. A trailing unfinished episode
/// is not reported. Non-finite losses or gradients abort with
/// [`Error::TrainingHalted`] after every earlier record has been delivered.
pub fn train<F>(env: &dyn MixedMdp, config: &GdpgConfig, seed: u64, mut on_record: F) -> Result<GdpgState>
where
    F: FnMut(&RunRecord) -> Result<()>,
{
    let mut state = GdpgState::new(env, config.clone(), seed)?;
    let mut window: VecDeque<f64> = VecDeque::with_capacity(100);
    let mut window_sum;
    let mut episode = 0u64;
    let max_len = env.max_episode_steps() as u64;
    while state.steps < config.total_steps {
        let mut s = env.reset(&mut state.env_rng);
        state.noise.reset();
        let mut ret = 0.0;
        let mut len = 0u64;
        let finished = loop {
            if state.steps >= config.total_steps {
                break false;
            }
            let a = if state.steps < config.warmup_steps {
                state.random_action()
            } else {
                state.select_action(&s, true).map_err(|e| halt(state.steps, e))?
            };
            let tr = env.step(&s, &a, &mut state.env_rng).map_err(|e| halt(state.steps, e))?;
            state.buffer.push(&s, &a, tr.reward, &tr.next_state, tr.done)?;
            let step_index = state.steps;
            state.steps += 1;
            ret += tr.reward;
            len += 1;
            if step_index >= config.warmup_steps && state.buffer.len() >= config.batch_size {
                let batch = state.sample_batch()?;
                state.update(&batch).map_err(|e| halt(step_index, e))?;
            }
            s = tr.next_state;
            if tr.done || len >= max_len {
                break true;
            }
        };
        if !finished {
            break;
        }
        if window.len() == 100 {
            window.pop_front();
        }
        window.push_back(ret);
        // Summed afresh each episode so the mean never drifts.
        window_sum = window.iter().sum::<f64>();
        on_record(&RunRecord {
            seed,
            episode,
            steps: state.steps,
            episode_return: ret,
            rolling100: window_sum / window.len() as f64,
        })?;
        episode += 1;
    }
    Ok(state)
}

fn halt(step: u64, e: Error) -> Error {
    match e {
        Error::NonFinite(reason) => Error::TrainingHalted { step, reason },
        other => other,
    }
}

/// Convenience wrapper collecting every record.
pub fn train_records(env: &dyn MixedMdp, config: &GdpgConfig, seed: u64) -> Result<(Vec<RunRecord>, GdpgState)> {
    let mut records = Vec::new();
    let state = train(env, config, seed, |r| {
        records.push(r.clone());
        Ok(())
    })?;
    Ok((records, state))
}

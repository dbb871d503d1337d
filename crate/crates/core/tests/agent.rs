mod common;

use common::{dot, naive_forward};
use gdpg_core::agent::{soft_update, train_records, Batch, GdpgConfig, GdpgState, Mode, NoiseConfig, NoiseProcess};
use gdpg_core::env::{ComplexPointEnv, Curvature, ForcedDeterministic, MixedMdp, QuadraticConvexEnv};
use gdpg_core::linalg::RealMatrix;
use gdpg_core::mlp::{MlpParams, OutputActivation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small_config() -> GdpgConfig {
    GdpgConfig {
        hidden: 32,
        batch_size: 64,
        warmup_steps: 200,
        total_steps: 1000,
        buffer_capacity: 10_000,
        ..GdpgConfig::default()
    }
}

fn random_batch(n: usize, m: usize, rows: usize, rng: &mut ChaCha8Rng) -> Batch {
    let mut draw = |cols: usize| RealMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0));
    let states = draw(n);
    let actions = draw(m);
    let next_states = draw(n);
    Batch {
        states,
        actions,
        rewards: vec![0.0; rows],
        next_states,
        dones: vec![0.0; rows],
    }
}

/// Transitions gathered from `env` with actions from `act`.
fn collect(env: &dyn MixedMdp, rows: usize, seed: u64, act: impl Fn(&mut ChaCha8Rng) -> Vec<f64>) -> Batch {
    let (n, m) = (env.state_dim(), env.action_dim());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut s_all, mut a_all, mut next_all, mut rewards) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for _ in 0..rows {
        let s = env.reset(&mut rng);
        let a = act(&mut rng);
        let tr = env.step(&s, &a, &mut rng).unwrap();
        s_all.extend_from_slice(&s);
        a_all.extend_from_slice(&a);
        next_all.extend_from_slice(&tr.next_state);
        rewards.push(tr.reward);
    }
    Batch {
        states: RealMatrix::from_vec(rows, n, s_all).unwrap(),
        actions: RealMatrix::from_vec(rows, m, a_all).unwrap(),
        rewards,
        next_states: RealMatrix::from_vec(rows, n, next_all).unwrap(),
        dones: vec![0.0; rows],
    }
}

fn rows_of(batch: &Batch, idx: &[usize]) -> Batch {
    let pick = |m: &RealMatrix| RealMatrix::from_fn(idx.len(), m.cols(), |i, j| m[(idx[i], j)]);
    Batch {
        states: pick(&batch.states),
        actions: pick(&batch.actions),
        rewards: idx.iter().map(|&i| batch.rewards[i]).collect(),
        next_states: pick(&batch.next_states),
        dones: idx.iter().map(|&i| batch.dones[i]).collect(),
    }
}

fn mean_sq_error(net: &MlpParams, batch: &Batch) -> f64 {
    let mut total = 0.0;
    for i in 0..batch.len() {
        let x: Vec<f64> = batch.states.row(i).iter().chain(batch.actions.row(i)).copied().collect();
        let y = naive_forward(net, &x).0;
        total += y.iter().zip(batch.next_states.row(i)).map(|(p, t)| (p - t).powi(2)).sum::<f64>();
    }
    total / batch.len() as f64
}

#[test]
fn ddpg_equals_gdpg_at_unit_weight() {
    let env = ComplexPointEnv::default();
    let gdpg = GdpgConfig {
        mode: Mode::Gdpg,
        alpha: 1.0,
        auxiliary_updates: false,
        ..small_config()
    };
    let ddpg = GdpgConfig {
        mode: Mode::Ddpg,
        ..small_config()
    };
    let (ra, a) = train_records(&env, &gdpg, 17).unwrap();
    let (rb, b) = train_records(&env, &ddpg, 17).unwrap();
    assert_eq!(a.actor.to_flat(), b.actor.to_flat());
    assert_eq!(a.critic.to_flat(), b.critic.to_flat());
    assert_eq!(ra, rb);
    let init = GdpgState::new(&env, ddpg, 17).unwrap();
    assert_ne!(init.actor.to_flat(), b.actor.to_flat(), "the actor must have trained");
}

#[test]
fn actor_gradient_is_linear_in_alpha() {
    let env = ComplexPointEnv::default();
    let (_, state) = train_records(&env, &small_config(), 3).unwrap();
    let states = random_batch(5, 5, 64, &mut ChaCha8Rng::seed_from_u64(1)).states;
    let g1 = state.actor_gradient(&states, 1.0).unwrap();
    let g0 = state.actor_gradient(&states, 0.0).unwrap();
    for alpha in [0.25, 0.5, 0.9, 2.0] {
        let mut expected = g1.clone();
        expected.scale(alpha);
        expected.add_scaled(1.0 - alpha, &g0).unwrap();
        assert_eq!(state.actor_gradient(&states, alpha).unwrap(), expected, "alpha {alpha}");
    }
    assert_eq!(state.actor_gradient(&states, 1.0).unwrap(), g1);
}

#[test]
fn identical_critics_make_alpha_irrelevant() {
    let env = ComplexPointEnv::default();
    let mut state = GdpgState::new(&env, small_config(), 4).unwrap();
    state.augmented_critic = state.critic.clone();
    let states = random_batch(5, 5, 32, &mut ChaCha8Rng::seed_from_u64(2)).states;
    let g1 = state.actor_gradient(&states, 1.0).unwrap();
    // Halving is exact and so is summing two equal halves.
    assert_eq!(state.actor_gradient(&states, 0.5).unwrap(), g1);
    for alpha in [0.0, 0.3, 2.0] {
        let g = state.actor_gradient(&states, alpha).unwrap();
        let mut diff = g.clone();
        diff.add_scaled(-1.0, &g1).unwrap();
        assert!(diff.squared_norm().sqrt() <= 1e-12 * g1.squared_norm().sqrt().max(1e-12));
    }
}

#[test]
fn actor_gradient_matches_composed_differences() {
    let env = ComplexPointEnv::default();
    let state = GdpgState::new(&env, small_config(), 9).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let states = random_batch(5, 5, 16, &mut rng).states;
    // mean_i Q(s_i, μ_θ(s_i)), evaluated with the naive forward pass.
    let objective = |actor: &MlpParams, critic: &MlpParams| {
        (0..states.rows())
            .map(|i| {
                let a = naive_forward(actor, states.row(i)).0;
                let x: Vec<f64> = states.row(i).iter().chain(&a).copied().collect();
                naive_forward(critic, &x).0[0]
            })
            .sum::<f64>()
            / states.rows() as f64
    };
    for (alpha, critic) in [(1.0, &state.critic), (0.0, &state.augmented_critic)] {
        let g = state.actor_gradient(&states, alpha).unwrap().to_flat();
        let flat = state.actor.to_flat();
        for _ in 0..4 {
            let d: Vec<f64> = (0..flat.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let h = 1e-5;
            let mut probe = state.actor.clone();
            probe.set_flat(&flat.iter().zip(&d).map(|(p, di)| p + h * di).collect::<Vec<_>>()).unwrap();
            let plus = objective(&probe, critic);
            probe.set_flat(&flat.iter().zip(&d).map(|(p, di)| p - h * di).collect::<Vec<_>>()).unwrap();
            let minus = objective(&probe, critic);
            let fd = (plus - minus) / (2.0 * h);
            let analytic = dot(&g, &d);
            assert!((fd - analytic).abs() <= 1e-4 * fd.abs().max(1e-6), "{analytic} vs {fd}");
        }
    }
}

#[test]
fn soft_update_decays_geometrically() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let online = MlpParams::random(&[3, 8, 2], OutputActivation::Identity, &mut rng).unwrap();
    let mut target = online.zeros_like();
    let tau = 0.001;
    for _ in 0..1000 {
        soft_update(&mut target, &online, tau);
    }
    // target = (1 − (1 − τ)^k) · online
    let remaining = (1.0 - tau).powi(1000);
    for (t, o) in target.to_flat().iter().zip(online.to_flat()) {
        assert!((t - (1.0 - remaining) * o).abs() < 1e-9);
    }
    soft_update(&mut target, &online, 1.0);
    assert_eq!(target, online);
}

fn critic_fixed_point(done: f64) -> f64 {
    let env = ComplexPointEnv::default();
    let config = GdpgConfig {
        gamma: 0.9,
        tau: 0.05,
        critic_lr: 3e-3,
        ..small_config()
    };
    let mut state = GdpgState::new(&env, config, 2).unwrap();
    let mut batch = random_batch(5, 5, 64, &mut ChaCha8Rng::seed_from_u64(3));
    batch.next_states = batch.states.clone();
    // On-policy actions, so the bootstrap point (s', μ'(s')) is in the data.
    batch.actions = state.actor_target.predict_batch(&batch.states).unwrap();
    batch.rewards = vec![1.0; 64];
    batch.dones = vec![done; 64];
    for _ in 0..8000 {
        state.critic_update(&batch).unwrap();
        state.soft_update_targets();
    }
    let x: Vec<f64> = batch.states.row(0).iter().chain(batch.actions.row(0)).copied().collect();
    naive_forward(&state.critic, &x).0[0]
}

#[test]
fn critic_learns_self_loop_value() {
    // r = 1 forever: Q = 1 / (1 − γ) = 10.
    let q = critic_fixed_point(0.0);
    assert!((q - 10.0).abs() < 0.2, "{q}");
}

#[test]
fn terminal_transitions_do_not_bootstrap() {
    let q = critic_fixed_point(1.0);
    assert!((q - 1.0).abs() < 0.05, "{q}");
}

#[test]
fn critic_regresses_reward_at_zero_discount() {
    let env = ComplexPointEnv::default();
    let config = GdpgConfig {
        gamma: 0.0,
        ..small_config()
    };
    let mut state = GdpgState::new(&env, config, 5).unwrap();
    let data = collect(&env, 4096, 1, |rng| (0..5).map(|_| rng.random_range(-0.1..0.1)).collect());
    let variance = {
        let mean = data.rewards.iter().sum::<f64>() / data.len() as f64;
        data.rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / data.len() as f64
    };
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..3000 {
        let idx: Vec<usize> = (0..64).map(|_| rng.random_range(0..data.len())).collect();
        state.critic_update(&rows_of(&data, &idx)).unwrap();
    }
    let holdout = collect(&env, 1000, 2, |rng| (0..5).map(|_| rng.random_range(-0.1..0.1)).collect());
    let mse = (0..holdout.len())
        .map(|i| {
            let x: Vec<f64> = holdout.states.row(i).iter().chain(holdout.actions.row(i)).copied().collect();
            (naive_forward(&state.critic, &x).0[0] - holdout.rewards[i]).powi(2)
        })
        .sum::<f64>()
        / holdout.len() as f64;
    assert!(mse < 0.1 * variance, "mse {mse}, reward variance {variance}");
}

/// Trains `T̂` on `train` for `steps` minibatches; returns held-out `L3`.
fn fit_transition(env: &dyn MixedMdp, train: &Batch, holdout: &Batch, steps: usize) -> f64 {
    let config = GdpgConfig {
        hidden: 64,
        ..GdpgConfig::default()
    };
    let mut state = GdpgState::new(env, config, 6).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..steps {
        let idx: Vec<usize> = (0..128).map(|_| rng.random_range(0..train.len())).collect();
        state.transition_update(&rows_of(train, &idx)).unwrap();
    }
    mean_sq_error(&state.transition, holdout)
}

#[test]
fn transition_loss_approaches_uniform_variance_floor() {
    let env = ComplexPointEnv::default();
    // Near-zero actions leave f ≈ 0: s' is uniform on [-1, 1]^5 whatever (s, a).
    let tiny = |rng: &mut ChaCha8Rng| (0..5).map(|_| rng.random_range(-1e-3..1e-3)).collect();
    let train = collect(&env, 20_000, 1, tiny);
    let holdout = collect(&env, 5_000, 2, tiny);
    let floor = 5.0 * (2.0f64 * 2.0) / 12.0;
    let l3 = fit_transition(&env, &train, &holdout, 3000);
    assert!((l3 - floor).abs() < 0.1 * floor, "L3 {l3} vs floor {floor}");
}

#[test]
fn transition_fits_realizable_linear_dynamics() {
    let env = ForcedDeterministic::new(QuadraticConvexEnv::new(3, 1.0, 0.3, Curvature::Convex).unwrap());
    let uniform = |rng: &mut ChaCha8Rng| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
    let train = collect(&env, 20_000, 1, uniform);
    let holdout = collect(&env, 2_000, 2, uniform);
    let l3 = fit_transition(&env, &train, &holdout, 6000);
    assert!(l3 < 1e-3, "L3 {l3}");
}

#[test]
fn ou_noise_is_centered() {
    let mut p = NoiseProcess::new(NoiseConfig::default(), 2);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let (mut sum, mut count) = (0.0, 0);
    for episode in 0..400 {
        if episode > 0 {
            p.reset();
        }
        for _ in 0..100 {
            sum += p.sample(&mut rng).iter().sum::<f64>();
            count += 2;
        }
    }
    let mean = sum / count as f64;
    // Stationary sd ≈ 0.2/√(1 − 0.85²) ≈ 0.38; samples within an episode are
    // correlated (~13 steps), so the error bar here is generous.
    assert!(mean.abs() < 0.03, "{mean}");
}

#[test]
fn gaussian_noise_has_requested_spread() {
    let mut p = NoiseProcess::new(NoiseConfig::Gaussian { sigma: 0.3 }, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let xs: Vec<f64> = (0..20_000).map(|_| p.sample(&mut rng)[0]).collect();
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64).sqrt();
    assert!(mean.abs() < 0.01 && (sd - 0.3).abs() < 0.01, "{mean} {sd}");
}

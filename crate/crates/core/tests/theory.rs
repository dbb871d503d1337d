mod common;

use common::{dot, rel_err};
use gdpg_core::env::{ComplexPointEnv, Curvature, FiniteDifferenceJacobians, ForcedDeterministic, MixedMdp, PendulumEnv, QuadraticConvexEnv};
use gdpg_core::linalg::RealMatrix;
use gdpg_core::mlp::{MlpParams, OutputActivation};
use gdpg_core::policy::{DeterministicPolicy, FixedPolicy};
use gdpg_core::theory::{
    convergence_report, deterministic_value, mc_return, mc_return_augmented, policy_gradient_deterministic,
    policy_gradient_general, policy_gradient_stochastic, series_grad_value, GradientSettings,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn theory_actor(seed: u64) -> FixedPolicy {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    FixedPolicy::Mlp(MlpParams::random(&[5, 16, 16, 5], OutputActivation::Squash { scale: 0.1 }, &mut rng).unwrap())
}

fn unit_direction(p: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let d: Vec<f64> = (0..p).map(|_| rng.random_range(-1.0..1.0)).collect();
    let n = dot(&d, &d).sqrt();
    d.into_iter().map(|v| v / n).collect()
}

fn shifted(policy: &FixedPolicy, d: &[f64], h: f64) -> FixedPolicy {
    let mut probe = policy.clone();
    let theta: Vec<f64> = policy.params().iter().zip(d).map(|(p, di)| p + h * di).collect();
    probe.set_params(&theta).unwrap();
    probe
}

#[test]
fn deterministic_gradient_matches_objective_differences() {
    let env = ForcedDeterministic::new(ComplexPointEnv::default());
    let policy = theory_actor(11);
    let settings = GradientSettings::new(0.9, 8, 40);
    let seed = 5;
    let objective = |pol: &FixedPolicy| {
        policy_gradient_deterministic(&env, pol, &settings, &mut ChaCha8Rng::seed_from_u64(seed))
            .unwrap()
            .objective
    };
    let est = policy_gradient_deterministic(&env, &policy, &settings, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
    let scale = dot(&est.gradient, &est.gradient).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let h = 1e-5;
    for _ in 0..16 {
        let d = unit_direction(policy.num_params(), &mut rng);
        let fd = (objective(&shifted(&policy, &d, h)) - objective(&shifted(&policy, &d, -h))) / (2.0 * h);
        let analytic = dot(&est.gradient, &d);
        assert!(rel_err(analytic, fd, 1e-3 * scale) < 1e-2, "{analytic} vs {fd}");
    }
}

#[test]
fn general_estimator_reduces_when_always_deterministic() {
    let env = ForcedDeterministic::new(ComplexPointEnv::default());
    let policy = theory_actor(3);
    let settings = GradientSettings::new(0.9, 4, 25);
    let a = policy_gradient_deterministic(&env, &policy, &settings, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
    let b = policy_gradient_general(&env, &policy, &settings, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
    assert_eq!(a.trajectories, b.trajectories);
    assert_eq!(a.gradient, b.gradient);
    assert_eq!(a.objective, b.objective);
}

#[test]
fn general_estimator_reduces_when_never_deterministic() {
    let env = QuadraticConvexEnv::new(3, 0.0, 0.3, Curvature::Convex).unwrap();
    let k = RealMatrix::from_fn(3, 3, |i, j| if i == j { -0.4 } else { 0.05 * (i + j) as f64 });
    let policy = FixedPolicy::Linear(k);
    let mut settings = GradientSettings::new(0.8, 3, 10);
    settings.value_rollouts = 4;
    settings.mc_next_states = 3;
    let a = policy_gradient_stochastic(&env, &policy, &settings, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
    let b = policy_gradient_general(&env, &policy, &settings, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
    assert_eq!(a.trajectories, b.trajectories);
    assert_eq!(a.gradient, b.gradient);
    // The kernel term is live here, so the comparison is not vacuous.
    assert!(a.trajectories.iter().any(|t| t.kernel.iter().any(|v| *v != 0.0)));
}

/// A theory-shaped actor that pushes every coordinate toward the origin,
/// `μ(s) ≈ 0.1 tanh(-10 s)`, plus small random weights everywhere. Under it
/// the deterministic branch pays off, so `∇J` is large enough for a
/// Monte-Carlo difference to resolve.
fn steering_actor(seed: u64) -> FixedPolicy {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = MlpParams::random(&[5, 16, 16, 5], OutputActivation::Squash { scale: 0.1 }, &mut rng).unwrap();
    let w = net.weights_mut();
    for m in w.iter_mut() {
        m.as_mut_slice().iter_mut().for_each(|v| *v *= 0.05);
    }
    for i in 0..5 {
        // relu(s) - relu(-s) routed through both hidden layers.
        w[0][(i, i)] += 1.0;
        w[0][(5 + i, i)] -= 1.0;
        w[1][(i, i)] += 1.0;
        w[1][(5 + i, 5 + i)] += 1.0;
        w[2][(i, i)] -= 10.0;
        w[2][(i, 5 + i)] += 10.0;
    }
    FixedPolicy::Mlp(net)
}

#[test]
fn general_estimator_points_along_sampled_objective_slope() {
    let env = ComplexPointEnv::default();
    let policy = steering_actor(21);
    let (gamma, horizon) = (0.9, 30);
    let mut settings = GradientSettings::new(gamma, 200, horizon);
    settings.value_rollouts = 8;
    settings.mc_next_states = 4;
    let est = policy_gradient_general(&env, &policy, &settings, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    // Branch flips make each sampled difference O(1/h) noisy; a wide step keeps it resolvable.
    let h = 0.1;
    let (mut analytic, mut fd) = (Vec::new(), Vec::new());
    for k in 0..8 {
        let d = unit_direction(policy.num_params(), &mut rng);
        // Common random numbers across the two probes.
        let j = |sign: f64| {
            mc_return(&env, &shifted(&policy, &d, sign * h), gamma, 10_000, horizon, &mut ChaCha8Rng::seed_from_u64(100 + k))
                .unwrap()
                .mean
        };
        fd.push((j(1.0) - j(-1.0)) / (2.0 * h));
        analytic.push(dot(&est.gradient, &d));
    }
    let cosine = dot(&analytic, &fd) / (dot(&analytic, &analytic) * dot(&fd, &fd)).sqrt();
    assert!(cosine > 0.8, "cosine {cosine}: {analytic:?} vs {fd:?}");
}

#[test]
fn complex_point_report_matches_analytic_forms() {
    let env = ComplexPointEnv::default();
    let corner = FixedPolicy::corner(env.action_high()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let report = convergence_report(&env, &corner, 16, 50, &mut rng).unwrap();
    // ∇_s T = I, so c = 1 and the bound is 1/5; the corner drives f to 1.
    assert_eq!(report.n, 5);
    assert_eq!(report.c, 1.0);
    assert!((report.gamma_threshold - 0.2).abs() < 1e-12);
    assert!((report.max_mixing - 1.0).abs() < 1e-12);
    assert!(!report.cond_a1);
    assert!(report.cond_a2);
    assert!(report.cond_a2_worst_radius <= 1.0 + 1e-9);
    assert!(report.existence_guaranteed(0.9));
}

#[test]
fn pendulum_series_matches_value_differences() {
    let env = FiniteDifferenceJacobians::new(PendulumEnv::default());
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let net = MlpParams::random(&[3, 16, 16, 1], OutputActivation::Squash { scale: 0.5 }, &mut rng).unwrap();
    let policy = FixedPolicy::Mlp(net);
    let (gamma, horizon) = (0.9, 200);
    for _ in 0..4 {
        let s = env.reset(&mut rng);
        let series = series_grad_value(&env, &policy, &s, gamma, horizon).unwrap();
        let scale = dot(&series, &series).sqrt();
        for j in 0..3 {
            let h = 1e-5;
            let mut sp = s.to_vec();
            sp[j] += h;
            let mut sm = s.to_vec();
            sm[j] -= h;
            let fd = (deterministic_value(&env, &policy, &sp, gamma, horizon).unwrap()
                - deterministic_value(&env, &policy, &sm, gamma, horizon).unwrap())
                / (2.0 * h);
            assert!(rel_err(series[j], fd, 1e-3 * scale) < 1e-3, "coord {j}: {} vs {fd}", series[j]);
        }
    }
}

/// `Σ γᵗ tr((Q + KᵀRK) Σ_t)` with `Σ_{t+1} = M Σ_t Mᵀ + noise·I` and `Σ₀ = I/3`.
fn linear_quadratic_value(env: &QuadraticConvexEnv, k: &RealMatrix, gamma: f64, horizon: usize, noise: f64) -> f64 {
    let n = env.a.rows();
    let at = |m: &RealMatrix, i: usize, j: usize| m.as_slice()[i * m.cols() + j];
    let mul = |x: &[Vec<f64>], y: &[Vec<f64>]| -> Vec<Vec<f64>> {
        (0..n).map(|i| (0..n).map(|j| (0..n).map(|l| x[i][l] * y[l][j]).sum()).collect()).collect()
    };
    let m: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| at(&env.a, i, j) + (0..n).map(|l| at(&env.b, i, l) * at(k, l, j)).sum::<f64>())
                .collect()
        })
        .collect();
    let mt: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| m[j][i]).collect()).collect();
    let cost: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    at(&env.q, i, j)
                        + (0..n)
                            .flat_map(|p| (0..n).map(move |q| (p, q)))
                            .map(|(p, q)| at(k, p, i) * at(&env.r, p, q) * at(k, q, j))
                            .sum::<f64>()
                })
                .collect()
        })
        .collect();
    let sign = if env.curvature == Curvature::Convex { 1.0 } else { -1.0 };
    let mut sigma: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 / 3.0 } else { 0.0 }).collect()).collect();
    let mut total = 0.0;
    let mut discount = 1.0;
    for _ in 0..horizon {
        let trace: f64 = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| cost[i][j] * sigma[j][i]).sum();
        total += discount * sign * trace;
        sigma = mul(&mul(&m, &sigma), &mt);
        for (i, row) in sigma.iter_mut().enumerate() {
            row[i] += noise;
        }
        discount *= gamma;
    }
    total
}

fn augmented_gap(curvature: Curvature) -> (f64, f64, f64, f64) {
    let env = QuadraticConvexEnv::new(3, 0.5, 0.3, curvature).unwrap();
    let k = RealMatrix::from_fn(3, 3, |i, j| if i == j { -0.3 } else { 0.0 });
    let policy = FixedPolicy::Linear(k.clone());
    let (gamma, horizon, episodes) = (0.9, 50, 10_000);
    let j = mc_return(&env, &policy, gamma, episodes, horizon, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    let j_star = mc_return_augmented(&env, &policy, gamma, episodes, horizon, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
    let sigma = (j.std_err.powi(2) + j_star.std_err.powi(2)).sqrt();
    // Independent check of both estimates against the covariance recursion.
    let noise = (1.0 - env.mixing) * env.noise_std.powi(2);
    let exact = linear_quadratic_value(&env, &k, gamma, horizon, noise);
    let exact_star = linear_quadratic_value(&env, &k, gamma, horizon, 0.0);
    assert!((j.mean - exact).abs() < 4.0 * j.std_err, "{} vs {exact}", j.mean);
    assert!((j_star.mean - exact_star).abs() < 4.0 * j_star.std_err, "{} vs {exact_star}", j_star.mean);
    (j.mean, j_star.mean, sigma, exact - exact_star)
}

#[test]
fn convex_values_dominate_the_augmented_mdp() {
    let (j, j_star, sigma, exact_gap) = augmented_gap(Curvature::Convex);
    assert!(j >= j_star - 3.0 * sigma, "{j} < {j_star} - 3·{sigma}");
    assert!(exact_gap > 0.0);
}

#[test]
fn concave_values_flip_the_ordering() {
    let (j, j_star, sigma, exact_gap) = augmented_gap(Curvature::Concave);
    assert!(j <= j_star + 3.0 * sigma, "{j} > {j_star} + 3·{sigma}");
    assert!(exact_gap < 0.0);
}

#[test]
fn reports_are_seed_stable() {
    let env = ComplexPointEnv::default();
    let policy = theory_actor(2);
    let a = convergence_report(&env, &policy, 4, 20, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
    let b = convergence_report(&env, &policy, 4, 20, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
    assert_eq!(a, b);
}

//! Oracles shared by the integration tests and the acceptance target. None of
//! these call into the library's forward or backward code.
#![allow(dead_code)]

use gdpg_core::mlp::{MlpParams, OutputActivation};
use rand::Rng;

/// Plain scalar forward pass; also returns the smallest |pre-activation| seen
/// in a ReLU layer so callers can avoid evaluating right on a kink.
pub fn naive_forward(net: &MlpParams, x: &[f64]) -> (Vec<f64>, f64) {
    let mut h = x.to_vec();
    let mut closest_kink = f64::INFINITY;
    let layers = net.weights().len();
    for l in 0..layers {
        let w = &net.weights()[l];
        let b = &net.biases()[l];
        let mut z = vec![0.0; w.rows()];
        for (i, zi) in z.iter_mut().enumerate() {
            let mut acc = b[i];
            for (j, hj) in h.iter().enumerate() {
                acc += w[(i, j)] * hj;
            }
            *zi = acc;
        }
        if l + 1 < layers {
            for v in z.iter_mut() {
                closest_kink = closest_kink.min(v.abs());
                *v = v.max(0.0);
            }
        } else if let OutputActivation::Squash { scale } = net.output_activation() {
            z.iter_mut().for_each(|v| *v = scale * v.tanh());
        }
        h = z;
    }
    (h, closest_kink)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `|a - b| / max(|a|, |b|, floor)`.
pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// Central difference of `u · net(x)` along parameter coordinate `k`.
pub fn fd_param(net: &MlpParams, x: &[f64], u: &[f64], k: usize, h: f64) -> f64 {
    let mut flat = net.to_flat();
    let base = flat[k];
    let mut probe = net.clone();
    flat[k] = base + h;
    probe.set_flat(&flat).unwrap();
    let plus = dot(&naive_forward(&probe, x).0, u);
    flat[k] = base - h;
    probe.set_flat(&flat).unwrap();
    let minus = dot(&naive_forward(&probe, x).0, u);
    (plus - minus) / (2.0 * h)
}

/// Central difference of `u · net(x)` along input coordinate `j`.
pub fn fd_input(net: &MlpParams, x: &[f64], u: &[f64], j: usize, h: f64) -> f64 {
    let mut xp = x.to_vec();
    xp[j] += h;
    let plus = dot(&naive_forward(net, &xp).0, u);
    xp[j] -= 2.0 * h;
    let minus = dot(&naive_forward(net, &xp).0, u);
    (plus - minus) / (2.0 * h)
}

/// Central difference along a whole-parameter direction `d`.
pub fn fd_param_direction(net: &MlpParams, x: &[f64], u: &[f64], d: &[f64], h: f64) -> f64 {
    let flat = net.to_flat();
    let mut probe = net.clone();
    let shifted = |sign: f64| flat.iter().zip(d).map(|(p, di)| p + sign * h * di).collect::<Vec<_>>();
    probe.set_flat(&shifted(1.0)).unwrap();
    let plus = dot(&naive_forward(&probe, x).0, u);
    probe.set_flat(&shifted(-1.0)).unwrap();
    let minus = dot(&naive_forward(&probe, x).0, u);
    (plus - minus) / (2.0 * h)
}

/// A point whose ReLU pre-activations all sit at least `margin` from zero.
pub fn point_away_from_kinks<R: Rng>(net: &MlpParams, rng: &mut R, margin: f64) -> Vec<f64> {
    loop {
        let x: Vec<f64> = (0..net.input_dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
        if naive_forward(net, &x).1 > margin {
            return x;
        }
    }
}

/// Every network shape the trainer builds for an env with these dims, plus
/// the small theory actor.
pub fn trainer_shapes() -> Vec<(Vec<usize>, OutputActivation)> {
    let mut shapes = Vec::new();
    // (state, action, squash scale or none)
    for (n, m, scale) in [(5, 5, Some(0.1)), (2, 2, None), (3, 1, Some(2.0)), (3, 3, None)] {
        let actor_out = scale.map_or(OutputActivation::Identity, |s| OutputActivation::Squash { scale: s });
        shapes.push((vec![n, 64, 64, m], actor_out));
        shapes.push((vec![n + m, 64, 64, 1], OutputActivation::Identity));
        shapes.push((vec![n + m, 64, 64, n], OutputActivation::Identity));
    }
    shapes.push((vec![5, 16, 16, 5], OutputActivation::Squash { scale: 0.1 }));
    shapes.dedup();
    shapes
}

/// Worst relative error of both gradient passes against central differences
/// at `points` random inputs: every input coordinate, `param_coords` sampled
/// parameter coordinates and one random full-parameter direction per point.
pub fn gradient_check<R: Rng>(net: &MlpParams, points: usize, param_coords: usize, h: f64, rng: &mut R) -> f64 {
    let mut worst: f64 = 0.0;
    let p = net.num_params();
    for _ in 0..points {
        let x = point_away_from_kinks(net, rng, 1e-3);
        let u: Vec<f64> = (0..net.output_dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (_, cache) = net.forward(&x).unwrap();
        let g_params = net.grad_params(&cache, &u).unwrap().to_flat();
        let g_input = net.grad_input(&cache, &u).unwrap();
        for j in 0..x.len() {
            worst = worst.max(rel_err(g_input[j], fd_input(net, &x, &u, j, h), 1e-6));
        }
        for _ in 0..param_coords.min(p) {
            let k = rng.random_range(0..p);
            worst = worst.max(rel_err(g_params[k], fd_param(net, &x, &u, k, h), 1e-6));
        }
        let d: Vec<f64> = (0..p).map(|_| rng.random_range(-1.0..1.0)).collect();
        worst = worst.max(rel_err(dot(&g_params, &d), fd_param_direction(net, &x, &u, &d, h), 1e-6));
    }
    worst
}

/// Coefficients of `det(λI − A)`, highest degree first, by Faddeev–LeVerrier.
pub fn char_poly(a: &[Vec<f64>]) -> Vec<f64> {
    let n = a.len();
    let mut coeffs = vec![1.0];
    let mut m = vec![vec![0.0; n]; n];
    let mut c = 1.0;
    for k in 1..=n {
        // M_k = A M_{k-1} + c_{k-1} I
        let mut next = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = if i == j { c } else { 0.0 };
                for l in 0..n {
                    acc += a[i][l] * m[l][j];
                }
                next[i][j] = acc;
            }
        }
        m = next;
        let mut trace = 0.0;
        for i in 0..n {
            for l in 0..n {
                trace += a[i][l] * m[l][i];
            }
        }
        c = -trace / k as f64;
        coeffs.push(c);
    }
    coeffs
}

/// All complex roots of a monic polynomial by Durand–Kerner, as (re, im).
pub fn poly_roots(coeffs: &[f64]) -> Vec<(f64, f64)> {
    let n = coeffs.len() - 1;
    let eval = |z: (f64, f64)| {
        let mut acc = (0.0, 0.0);
        for &c in coeffs {
            acc = (acc.0 * z.0 - acc.1 * z.1 + c, acc.0 * z.1 + acc.1 * z.0);
        }
        acc
    };
    // Start on a circle enclosing every root (Cauchy bound), off the real axis.
    let r = 1.0 + coeffs[1..].iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let mut roots: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let t = 0.4 + 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            (r * t.cos(), r * t.sin())
        })
        .collect();
    for _ in 0..5000 {
        let mut delta: f64 = 0.0;
        for i in 0..n {
            let num = eval(roots[i]);
            let mut den = (1.0, 0.0);
            for j in 0..n {
                if i != j {
                    let d = (roots[i].0 - roots[j].0, roots[i].1 - roots[j].1);
                    den = (den.0 * d.0 - den.1 * d.1, den.0 * d.1 + den.1 * d.0);
                }
            }
            let mag = den.0 * den.0 + den.1 * den.1;
            let q = ((num.0 * den.0 + num.1 * den.1) / mag, (num.1 * den.0 - num.0 * den.1) / mag);
            roots[i] = (roots[i].0 - q.0, roots[i].1 - q.1);
            delta = delta.max(q.0.abs() + q.1.abs());
        }
        if delta < 1e-15 {
            break;
        }
    }
    roots
}

/// `max |λ|` from the characteristic polynomial's roots.
pub fn eigen_radius_oracle(a: &[Vec<f64>]) -> f64 {
    poly_roots(&char_poly(a))
        .into_iter()
        .map(|(re, im)| re.hypot(im))
        .fold(0.0, f64::max)
}

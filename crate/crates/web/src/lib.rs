//! Browser bindings for three small demos: the Example 1 value-gradient
//! series, a convergence report for a fixed policy, and a short ComplexPoint
//! training run at a chosen GDPG weight.
//!
//! The plain functions are what the tests call; the `#[wasm_bindgen]`
//! wrappers only convert errors.

use gdpg_core::agent::{train, GdpgConfig, RunRecord};
use gdpg_core::env::make_env;
use gdpg_core::harness::{analysis_env, resolve_policy, sweep_agent};
use gdpg_core::theory::{convergence_report, example1_grad_value, example1_verdict};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wasm_bindgen::prelude::*;

/// Largest step count the page will train for.
pub const MAX_DEMO_STEPS: u32 = 20_000;

/// First coordinate of the partial sums `k = 1..=terms` with `θ = (1, 1)`.
pub fn series_curve(gamma: f64, terms: u32) -> Result<Vec<f64>, String> {
    if !(0.0..1.0).contains(&gamma) || terms == 0 || terms > 2000 {
        return Err("gamma must lie in [0, 1) and terms in 1..=2000".into());
    }
    // Each prefix is summed afresh: quadratic in `terms`, still instant at this size.
    (1..=terms as usize)
        .map(|k| {
            example1_grad_value(&[1.0, 1.0], gamma, k)
                .map(|s| if s.diverged { f64::INFINITY } else { s.partial_sum[0] })
                .map_err(|e| e.to_string())
        })
        .collect()
}

pub fn series_verdict(gamma: f64, terms: u32) -> Result<String, String> {
    example1_verdict(gamma, terms as usize)
        .map(|v| v.as_str().to_string())
        .map_err(|e| e.to_string())
}

/// `key=value` convergence report; checkpoints are not reachable from a page.
pub fn report_text(env_id: &str, policy: &str, chains: u32, chain_length: u32, seed: u64) -> Result<String, String> {
    if policy.starts_with("checkpoint:") {
        return Err("checkpoint policies need the command-line tool".into());
    }
    let env = analysis_env(env_id).map_err(|e| e.to_string())?;
    let policy = resolve_policy(policy, env.as_ref(), seed).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    convergence_report(env.as_ref(), &policy, chains as usize, chain_length as usize, &mut rng)
        .map(|r| r.to_key_value())
        .map_err(|e| e.to_string())
}

/// Rolling-100 return after each ComplexPoint episode.
pub fn training_curve(alpha: f64, steps: u32, seed: u64) -> Result<Vec<f64>, String> {
    if steps > MAX_DEMO_STEPS {
        return Err(format!("at most {MAX_DEMO_STEPS} steps in the browser"));
    }
    let env = make_env("complex_point").map_err(|e| e.to_string())?;
    let base = GdpgConfig {
        total_steps: steps as u64,
        warmup_steps: 500,
        buffer_capacity: (steps as usize).max(128),
        ..GdpgConfig::default()
    };
    let config = sweep_agent(&base, alpha);
    let mut curve = Vec::new();
    train(env.as_ref(), &config, seed, |r: &RunRecord| {
        curve.push(r.rolling100);
        Ok(())
    })
    .map_err(|e| e.to_string())?;
    Ok(curve)
}

#[wasm_bindgen(js_name = seriesCurve)]
pub fn series_curve_js(gamma: f64, terms: u32) -> Result<Vec<f64>, JsError> {
    series_curve(gamma, terms).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = seriesVerdict)]
pub fn series_verdict_js(gamma: f64, terms: u32) -> Result<String, JsError> {
    series_verdict(gamma, terms).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = reportText)]
pub fn report_text_js(env_id: &str, policy: &str, chains: u32, chain_length: u32, seed: u32) -> Result<String, JsError> {
    report_text(env_id, policy, chains, chain_length, seed as u64).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = trainingCurve)]
pub fn training_curve_js(alpha: f64, steps: u32, seed: u32) -> Result<Vec<f64>, JsError> {
    training_curve(alpha, steps, seed as u64).map_err(|e| JsError::new(&e))
}

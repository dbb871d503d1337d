use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::ExperimentConfig;
use super::csv::write_file;
use crate::agent::load_actor;
use crate::env::{make_env, FiniteDifferenceJacobians, MixedMdp};
use crate::error::{Error, Result};
use crate::linalg::RealVector;
use crate::mlp::{MlpParams, OutputActivation};
use crate::numfmt::fmt_float;
use crate::policy::{DeterministicPolicy, FixedPolicy};
use crate::theory::{convergence_report, example1_grad_value, example1_verdict, ConvergenceReport};

/// Per-discount outcome of `analyze`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GammaVerdict {
    Converged,
    Diverged,
    /// No sufficient condition holds and the series cannot be summed exactly.
    Undetermined,
}

impl GammaVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            GammaVerdict::Converged => "converged",
            GammaVerdict::Diverged => "diverged",
            GammaVerdict::Undetermined => "undetermined",
        }
    }
}

#[derive(Debug, Clone)]
pub struct AnalyzeOutput {
    pub report: ConvergenceReport,
    pub verdicts: Vec<(f64, GammaVerdict)>,
    pub report_path: PathBuf,
    pub verdicts_path: PathBuf,
    pub partial_sums_path: Option<PathBuf>,
}

/// Convergence report plus per-γ verdicts for one env and policy.
///
/// `linear_example1` verdicts come from summing its series exactly; other
/// envs are `converged` when a sufficient condition holds and `undetermined`
/// otherwise. Envs without analytic Jacobians use central differences.
pub fn analyze(config: &ExperimentConfig) -> Result<AnalyzeOutput> {
    let env = analysis_env(&config.env)?;
    let seed = config.seeds.first().copied().unwrap_or(0);
    let policy = resolve_policy(&config.policy, env.as_ref(), seed)?;
    if let Some(bad) = config.gammas.iter().find(|g| !(0.0..1.0).contains(*g)) {
        return Err(Error::InvalidConfig(format!("gamma {bad} outside [0, 1)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let report = convergence_report(env.as_ref(), &policy, config.chains, config.chain_length, &mut rng)?;
    let example1 = config.env == "linear_example1";

    let mut verdicts = Vec::with_capacity(config.gammas.len());
    let mut table = String::from("gamma,lemma_bound,existence_guaranteed,verdict\n");
    for &gamma in &config.gammas {
        let verdict = if example1 {
            match example1_verdict(gamma, config.terms)? {
                crate::theory::SeriesVerdict::Converged => GammaVerdict::Converged,
                crate::theory::SeriesVerdict::Diverged => GammaVerdict::Diverged,
            }
        } else if report.existence_guaranteed(gamma) {
            GammaVerdict::Converged
        } else {
            GammaVerdict::Undetermined
        };
        table.push_str(&format!(
            "{},{},{},{}\n",
            fmt_float(gamma),
            report.lemma_bound_holds(gamma),
            report.existence_guaranteed(gamma),
            verdict.as_str()
        ));
        verdicts.push((gamma, verdict));
    }

    let out = &config.out_dir;
    let report_path = out.join(format!("{}_report.txt", config.env));
    let header = format!("env={}\npolicy={}\nseed={seed}\n", config.env, config.policy);
    write_file(&report_path, &(header + &report.to_key_value()))?;
    let verdicts_path = out.join(format!("{}_verdicts.csv", config.env));
    write_file(&verdicts_path, &table)?;
    let partial_sums_path = if example1 {
        let theta = match &policy {
            FixedPolicy::Constant(t) => t.to_vec(),
            _ => vec![1.0, 1.0],
        };
        let path = out.join("linear_example1_partial_sums.csv");
        write_file(&path, &partial_sums_csv(&theta, &config.gammas, config.terms)?)?;
        Some(path)
    } else {
        None
    };
    Ok(AnalyzeOutput {
        report,
        verdicts,
        report_path,
        verdicts_path,
        partial_sums_path,
    })
}

/// `gamma,terms,grad1,grad2,diverged` for every prefix length up to `terms`.
pub fn partial_sums_csv(theta: &[f64], gammas: &[f64], terms: usize) -> Result<String> {
    let mut out = String::from("gamma,terms,grad1,grad2,diverged\n");
    for &gamma in gammas {
        for k in 1..=terms {
            let s = example1_grad_value(theta, gamma, k)?;
            out.push_str(&format!(
                "{},{k},{},{},{}\n",
                fmt_float(gamma),
                fmt_float(s.partial_sum[0]),
                fmt_float(s.partial_sum[1]),
                u8::from(s.diverged)
            ));
        }
    }
    Ok(out)
}

/// Builds the env, falling back to finite-difference Jacobians when it has
/// no analytic ones.
pub fn analysis_env(id: &str) -> Result<Box<dyn MixedMdp>> {
    let env = make_env(id)?;
    let probe_s = RealVector::zeros(env.state_dim());
    let probe_a = RealVector::zeros(env.action_dim());
    match env.jacobians(&probe_s, &probe_a) {
        Err(Error::Unsupported(_)) => Ok(Box::new(FiniteDifferenceJacobians::from_boxed(env))),
        _ => Ok(env),
    }
}

/// Turns a policy spec into a policy for `env`.
///
/// `auto` is `corner` for bounded action boxes and all-ones otherwise.
pub fn resolve_policy(spec: &str, env: &dyn MixedMdp, seed: u64) -> Result<FixedPolicy> {
    let m = env.action_dim();
    let bounded = env.action_low().iter().chain(env.action_high()).all(|v| v.is_finite());
    let policy = match spec.split_once(':') {
        Some(("constant", values)) => {
            let v = values
                .split(',')
                .map(|x| {
                    x.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::InvalidConfig(format!("bad constant policy value '{x}'")))
                })
                .collect::<Result<Vec<f64>>>()?;
            FixedPolicy::Constant(RealVector::new(v))
        }
        Some(("checkpoint", path)) => FixedPolicy::Mlp(load_actor(Path::new(path))?),
        _ => match spec {
            "auto" if bounded => FixedPolicy::corner(env.action_high())?,
            "auto" => FixedPolicy::Constant(RealVector::new(vec![1.0; m])),
            "corner" => FixedPolicy::corner(env.action_high())?,
            "zero" => FixedPolicy::Constant(RealVector::zeros(m)),
            "random" => {
                let output = if bounded {
                    OutputActivation::Squash {
                        scale: env.action_high()[0],
                    }
                } else {
                    OutputActivation::Identity
                };
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                FixedPolicy::Mlp(MlpParams::two_hidden(env.state_dim(), m, output, &mut rng)?)
            }
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unknown policy '{other}', expected auto, corner, zero, random, constant:v1,... or checkpoint:PATH"
                )))
            }
        },
    };
    if policy.action_dim() != m {
        return Err(Error::DimensionMismatch {
            context: "policy action",
            expected: m,
            got: policy.action_dim(),
        });
    }
    if let FixedPolicy::Mlp(net) = &policy {
        if net.input_dim() != env.state_dim() {
            return Err(Error::DimensionMismatch {
                context: "policy input",
                expected: env.state_dim(),
                got: net.input_dim(),
            });
        }
    }
    Ok(policy)
}

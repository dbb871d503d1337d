use std::path::{Path, PathBuf};

use crate::agent::{GdpgConfig, NoiseConfig};
use crate::env::ENV_IDS;
use crate::error::{Error, Result};

/// Environment variable naming the default output directory.
pub const OUT_ENV_VAR: &str = "GDPG_LAB_OUT";

/// The α grid swept when none is given.
pub const DEFAULT_ALPHAS: [f64; 6] = [0.0, 0.25, 0.5, 0.75, 1.0, 2.0];

/// Desk-scale step budget per run.
pub const DEFAULT_STEPS: u64 = 50_000;

/// Everything one `run`, `sweep-alpha` or `analyze` invocation needs.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub env: String,
    pub agent: GdpgConfig,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    pub workers: usize,
    /// Summary rows are taken every this many environment steps.
    pub eval_every: u64,
    pub alphas: Vec<f64>,
    /// Discounts checked by `analyze`.
    pub gammas: Vec<f64>,
    /// `auto`, `corner`, `zero`, `random`, `constant:v1,v2,...` or `checkpoint:PATH`.
    pub policy: String,
    pub chains: usize,
    pub chain_length: usize,
    /// Series length used for the Example 1 partial sums and verdicts.
    pub terms: usize,
    /// Write each trained state next to its CSV as `.ckpt`.
    pub save_checkpoints: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            env: "complex_point".into(),
            agent: GdpgConfig {
                total_steps: DEFAULT_STEPS,
                ..GdpgConfig::default()
            },
            seeds: (0..5).collect(),
            out_dir: default_out_dir(),
            workers: 1,
            eval_every: 1000,
            alphas: DEFAULT_ALPHAS.to_vec(),
            gammas: (1..=9).map(|k| k as f64 * 0.05).collect(),
            policy: "auto".into(),
            chains: 16,
            chain_length: 50,
            terms: 200,
            save_checkpoints: false,
        }
    }
}

/// `$GDPG_LAB_OUT`, falling back to `./gdpg-out`.
pub fn default_out_dir() -> PathBuf {
    std::env::var_os(OUT_ENV_VAR)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("gdpg-out"))
}

impl ExperimentConfig {
    /// Defaults overlaid with a `key=value` file.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    /// Applies every `key=value` line; `#` starts a comment, blank lines are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("line {}: expected key=value, got '{line}'", lineno + 1)))?;
            self.set(key.trim(), value.trim())
                .map_err(|e| Error::InvalidConfig(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(())
    }

    /// Sets one option by name, exactly as the config file spells it.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let a = &mut self.agent;
        match key {
            "env" => self.env = value.to_string(),
            "mode" => a.mode = value.parse()?,
            "alpha" => a.alpha = num(key, value)?,
            "gamma" => a.gamma = num(key, value)?,
            "tau" => a.tau = num(key, value)?,
            "batch_size" => a.batch_size = num(key, value)?,
            "actor_lr" => a.actor_lr = num(key, value)?,
            "critic_lr" => a.critic_lr = num(key, value)?,
            "transition_lr" => a.transition_lr = num(key, value)?,
            "transition_l2_coeff" => a.transition_l2_coeff = num(key, value)?,
            "buffer_capacity" => a.buffer_capacity = num(key, value)?,
            "warmup_steps" => a.warmup_steps = num(key, value)?,
            "steps" | "total_steps" => a.total_steps = num(key, value)?,
            "hidden" => a.hidden = num(key, value)?,
            "auxiliary_updates" => a.auxiliary_updates = num(key, value)?,
            "noise" => {
                a.noise = match value {
                    "ou" => NoiseConfig::default(),
                    "gaussian" => NoiseConfig::Gaussian { sigma: 0.1 },
                    other => return Err(Error::InvalidConfig(format!("unknown noise '{other}', expected ou or gaussian"))),
                }
            }
            "noise_sigma" => {
                let s = num(key, value)?;
                match &mut a.noise {
                    NoiseConfig::OrnsteinUhlenbeck { sigma, .. } | NoiseConfig::Gaussian { sigma } => *sigma = s,
                }
            }
            "noise_theta" => match &mut a.noise {
                NoiseConfig::OrnsteinUhlenbeck { theta, .. } => *theta = num(key, value)?,
                NoiseConfig::Gaussian { .. } => return Err(Error::InvalidConfig("noise_theta needs noise=ou".into())),
            },
            "seeds" => self.seeds = parse_seeds(value)?,
            "out" => self.out_dir = PathBuf::from(value),
            "workers" => self.workers = num(key, value)?,
            "eval_every" => self.eval_every = num(key, value)?,
            "alphas" => self.alphas = list(key, value)?,
            "gammas" => self.gammas = list(key, value)?,
            "policy" => self.policy = value.to_string(),
            "chains" => self.chains = num(key, value)?,
            "chain_length" => self.chain_length = num(key, value)?,
            "terms" => self.terms = num(key, value)?,
            "checkpoints" => self.save_checkpoints = num(key, value)?,
            other => return Err(Error::InvalidConfig(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if !ENV_IDS.contains(&self.env.as_str()) {
            return Err(Error::InvalidConfig(format!(
                "unknown environment '{}', expected one of {ENV_IDS:?}",
                self.env
            )));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("seed list is empty".into()));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidConfig(format!("seed {} appears more than once", w[0])));
        }
        if self.workers == 0 {
            return Err(Error::InvalidConfig("workers must be at least 1".into()));
        }
        if self.eval_every == 0 {
            return Err(Error::InvalidConfig("eval_every must be positive".into()));
        }
        self.agent.validate()
    }
}

/// Parses `0,1,2`, or an inclusive range `0..4` / `0-4`.
pub fn parse_seeds(value: &str) -> Result<Vec<u64>> {
    let bad = || Error::InvalidConfig(format!("cannot parse seeds '{value}'"));
    if let Some((lo, hi)) = value.split_once("..").or_else(|| value.split_once('-')) {
        let lo: u64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: u64 = hi.trim().parse().map_err(|_| bad())?;
        if lo > hi {
            return Err(bad());
        }
        return Ok((lo..=hi).collect());
    }
    value
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse().map_err(|_| bad()))
        .collect()
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("cannot parse {key} value '{value}'")))
}

fn list(key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| num(key, s.trim()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::Mode;

    #[test]
    fn parses_file_text() {
        let mut c = ExperimentConfig::default();
        c.apply_text("# demo\nenv = pendulum\nmode=ddpg  # trailing\n\nseeds=3,7\nsteps=2000\nalphas=0,1\nnoise=gaussian\nnoise_sigma=0.3\n")
            .unwrap();
        assert_eq!(c.env, "pendulum");
        assert_eq!(c.agent.mode, Mode::Ddpg);
        assert_eq!(c.seeds, vec![3, 7]);
        assert_eq!(c.agent.total_steps, 2000);
        assert_eq!(c.alphas, vec![0.0, 1.0]);
        assert_eq!(c.agent.noise, NoiseConfig::Gaussian { sigma: 0.3 });
        c.validate().unwrap();
    }

    #[test]
    fn rejects_unknown_keys_and_lines() {
        let mut c = ExperimentConfig::default();
        assert!(c.apply_text("colour=blue").is_err());
        assert!(c.apply_text("just words").is_err());
        assert!(c.apply_text("steps=many").is_err());
    }

    #[test]
    fn seed_forms() {
        assert_eq!(parse_seeds("0..3").unwrap(), vec![0, 1, 2, 3]);
        assert_eq!(parse_seeds("2-4").unwrap(), vec![2, 3, 4]);
        assert_eq!(parse_seeds("5, 9").unwrap(), vec![5, 9]);
        assert!(parse_seeds("4..1").is_err());
    }

    #[test]
    fn duplicate_seeds_rejected() {
        let c = ExperimentConfig {
            seeds: vec![1, 2, 1],
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let c = ExperimentConfig {
            seeds: vec![],
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let c = ExperimentConfig {
            env: "cartpole".into(),
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }
}

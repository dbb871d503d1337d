use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use gdpg_core::harness::{self, ExperimentConfig};
use gdpg_core::numfmt::fmt_float;
use gdpg_core::Error;

/// Seeded GDPG experiments and value-gradient convergence analysis.
#[derive(Parser)]
#[command(name = "gdpg-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train every seed and write per-seed CSVs plus summary.csv.
    Run {
        #[command(flatten)]
        common: Common,
        /// Also write each final agent state as a text checkpoint.
        #[arg(long)]
        checkpoints: bool,
    },
    /// Repeat `run` for each GDPG weight and write alpha_sweep.csv.
    SweepAlpha {
        #[command(flatten)]
        common: Common,
        /// Comma-separated weights, e.g. 0,0.5,1,2.
        #[arg(long)]
        alphas: Option<String>,
    },
    /// Convergence report and per-discount verdicts for a fixed policy.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Comma-separated discounts; `--gamma` alone checks one value.
        #[arg(long)]
        gammas: Option<String>,
        /// auto, corner, zero, random, constant:v1,v2,... or checkpoint:PATH.
        #[arg(long)]
        policy: Option<String>,
        #[arg(long)]
        chains: Option<usize>,
        #[arg(long)]
        chain_length: Option<usize>,
        /// Series terms for the Example 1 partial sums.
        #[arg(long)]
        terms: Option<usize>,
    },
}

/// Flags shared by every subcommand; they override `--config`.
#[derive(Args)]
struct Common {
    /// key=value file applied before the other flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    env: Option<String>,
    /// gdpg, ddpg, mdpg or augmented_only.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    steps: Option<u64>,
    /// Comma list (1,2,3) or inclusive range (0..4).
    #[arg(long)]
    seeds: Option<String>,
    /// Output directory [default: $GDPG_LAB_OUT or ./gdpg-out].
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    /// Any config-file key, e.g. --set tau=0.005; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                ExperimentConfig::from_file(path).with_context(|| format!("reading config {}", path.display()))?
            }
            None => ExperimentConfig::default(),
        };
        let flags: [(&str, Option<String>); 8] = [
            ("env", self.env.clone()),
            ("mode", self.mode.clone()),
            ("alpha", self.alpha.map(|v| v.to_string())),
            ("gamma", self.gamma.map(|v| v.to_string())),
            ("steps", self.steps.map(|v| v.to_string())),
            ("seeds", self.seeds.clone()),
            ("workers", self.workers.map(|v| v.to_string())),
            ("out", self.out.as_ref().map(|p| p.display().to_string())),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, &v)?;
            }
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("--set expects KEY=VALUE, got '{kv}'")))?;
            cfg.set(k.trim(), v.trim())?;
        }
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<Error>() {
                Some(Error::InvalidConfig(_)) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}

fn execute(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run { common, checkpoints } => {
            let mut cfg = common.load()?;
            cfg.save_checkpoints |= checkpoints;
            let out = harness::run(&cfg)?;
            for s in &out.seeds {
                println!("{}", s.path.display());
            }
            println!("{}", out.summary_path.display());
            if let Some(last) = out.summary.last() {
                println!(
                    "final steps={} mean_rolling100={} std_rolling100={}",
                    last.steps,
                    fmt_float(last.mean),
                    fmt_float(last.std)
                );
            }
            Ok(halted(out.first_error()))
        }
        Command::SweepAlpha { common, alphas } => {
            let mut cfg = common.load()?;
            if let Some(a) = alphas {
                cfg.set("alphas", &a)?;
            }
            let out = harness::sweep_alpha(&cfg)?;
            for (alpha, run) in &out.alphas {
                let last = run.summary.last();
                println!(
                    "alpha={} mean_rolling100={} std_rolling100={}",
                    fmt_float(*alpha),
                    last.map_or("nan".into(), |r| fmt_float(r.mean)),
                    last.map_or("nan".into(), |r| fmt_float(r.std))
                );
            }
            println!("{}", out.comparison_path.display());
            Ok(halted(out.first_error()))
        }
        Command::Analyze {
            common,
            gammas,
            policy,
            chains,
            chain_length,
            terms,
        } => {
            let mut cfg = common.load()?;
            if let Some(g) = common.gamma {
                cfg.gammas = vec![g];
            }
            let extra = [
                ("gammas", gammas),
                ("policy", policy),
                ("chains", chains.map(|v| v.to_string())),
                ("chain_length", chain_length.map(|v| v.to_string())),
                ("terms", terms.map(|v| v.to_string())),
            ];
            for (key, value) in extra {
                if let Some(v) = value {
                    cfg.set(key, &v)?;
                }
            }
            let out = harness::analyze(&cfg)?;
            print!("{}", out.report.to_key_value());
            for (gamma, verdict) in &out.verdicts {
                println!("gamma={} verdict={}", fmt_float(*gamma), verdict.as_str());
            }
            println!("{}", out.report_path.display());
            println!("{}", out.verdicts_path.display());
            if let Some(p) = &out.partial_sums_path {
                println!("{}", p.display());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// Exit status 3 when any seed halted; its CSV already ends in an error row.
fn halted(err: Option<&Error>) -> ExitCode {
    match err {
        Some(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
        None => ExitCode::SUCCESS,
    }
}

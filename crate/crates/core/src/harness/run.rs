use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use super::config::ExperimentConfig;
use super::csv::{run_csv, summary_csv, write_file, SummaryRow};
use crate::agent::{train, GdpgConfig, Mode, RunRecord};
use crate::env::make_env;
use crate::error::{Error, Result};
use crate::numfmt::fmt_float;

/// What one seed produced.
#[derive(Debug)]
pub struct SeedOutcome {
    pub seed: u64,
    pub records: Vec<RunRecord>,
    pub path: PathBuf,
    pub error: Option<Error>,
}

#[derive(Debug)]
pub struct RunOutput {
    pub seeds: Vec<SeedOutcome>,
    pub summary: Vec<SummaryRow>,
    pub summary_path: PathBuf,
}

impl RunOutput {
    /// The first halted seed, if any.
    pub fn first_error(&self) -> Option<&Error> {
        self.seeds.iter().find_map(|s| s.error.as_ref())
    }

    /// Final rolling-100 return of every seed that finished an episode.
    pub fn final_returns(&self) -> Vec<f64> {
        self.seeds
            .iter()
            .filter_map(|s| s.records.last().map(|r| r.rolling100))
            .collect()
    }
}

#[derive(Debug)]
pub struct SweepOutput {
    pub alphas: Vec<(f64, RunOutput)>,
    pub comparison_path: PathBuf,
}

impl SweepOutput {
    pub fn first_error(&self) -> Option<&Error> {
        self.alphas.iter().find_map(|(_, r)| r.first_error())
    }
}

/// Trains every seed and writes `{env}_seed{k}.csv` plus `summary.csv`.
///
/// A halted seed still gets its CSV, ending in an error marker row; the
/// other seeds run to completion. Check [`RunOutput::first_error`].
pub fn run(config: &ExperimentConfig) -> Result<RunOutput> {
    config.validate()?;
    let jobs: Vec<(u64, PathBuf)> = config
        .seeds
        .iter()
        .map(|&seed| (seed, config.out_dir.join(format!("{}_seed{seed}.csv", config.env))))
        .collect();
    let agent = config.agent.clone();
    let outcomes = run_jobs(&jobs, config.workers, |(seed, path)| run_seed(config, &agent, *seed, path))?;
    finish(config, outcomes, &config.out_dir.join("summary.csv"))
}

/// `run` once per `α`, sharing seeds; adds `alpha_sweep.csv` with each α's
/// last summary row.
///
/// `α = 1` trains as `ddpg` and `α = 0` as `augmented_only`: the actor sees
/// the same gradient either way and the skipped critics draw no randomness,
/// so the CSVs are identical to `gdpg` runs at those weights.
pub fn sweep_alpha(config: &ExperimentConfig) -> Result<SweepOutput> {
    config.validate()?;
    if config.alphas.is_empty() {
        return Err(Error::InvalidConfig("alpha list is empty".into()));
    }
    if config.agent.mode != Mode::Gdpg {
        return Err(Error::InvalidConfig(format!(
            "sweep-alpha varies the gdpg weight; mode is {}",
            config.agent.mode
        )));
    }
    let mut agents = Vec::with_capacity(config.alphas.len());
    for &alpha in &config.alphas {
        let agent = sweep_agent(&config.agent, alpha);
        agent.validate()?;
        agents.push(agent);
    }
    let jobs: Vec<(usize, u64, PathBuf)> = config
        .alphas
        .iter()
        .enumerate()
        .flat_map(|(i, &alpha)| {
            config.seeds.iter().map(move |&seed| {
                let name = format!("{}_alpha{}_seed{seed}.csv", config.env, fmt_float(alpha));
                (i, seed, config.out_dir.join(name))
            })
        })
        .collect();
    let mut outcomes = run_jobs(&jobs, config.workers, |(i, seed, path)| {
        run_seed(config, &agents[*i], *seed, path)
    })?
    .into_iter();
    let mut alphas = Vec::with_capacity(config.alphas.len());
    let mut table = String::from("alpha,steps,mean_rolling100,std_rolling100\n");
    for &alpha in &config.alphas {
        let chunk: Vec<SeedOutcome> = outcomes.by_ref().take(config.seeds.len()).collect();
        let path = config.out_dir.join(format!("summary_alpha{}.csv", fmt_float(alpha)));
        let out = finish(config, chunk, &path)?;
        if let Some(last) = out.summary.last() {
            table.push_str(&format!(
                "{},{},{},{}\n",
                fmt_float(alpha),
                last.steps,
                fmt_float(last.mean),
                fmt_float(last.std)
            ));
        }
        alphas.push((alpha, out));
    }
    let comparison_path = config.out_dir.join("alpha_sweep.csv");
    write_file(&comparison_path, &table)?;
    Ok(SweepOutput { alphas, comparison_path })
}

/// The agent configuration a sweep point trains with.
pub fn sweep_agent(base: &GdpgConfig, alpha: f64) -> GdpgConfig {
    let mode = if alpha == 1.0 {
        Mode::Ddpg
    } else if alpha == 0.0 {
        Mode::AugmentedOnly
    } else {
        Mode::Gdpg
    };
    GdpgConfig {
        mode,
        alpha,
        ..base.clone()
    }
}

fn run_seed(config: &ExperimentConfig, agent: &GdpgConfig, seed: u64, path: &Path) -> Result<SeedOutcome> {
    let env = make_env(&config.env)?;
    let mut records = Vec::new();
    let result = train(env.as_ref(), agent, seed, |r| {
        records.push(r.clone());
        Ok(())
    });
    let (state, error) = match result {
        Ok(state) => (Some(state), None),
        Err(e @ Error::TrainingHalted { .. }) => (None, Some(e)),
        Err(e) => return Err(e),
    };
    let msg = error.as_ref().map(|e| e.to_string());
    write_file(path, &run_csv(&records, msg.as_deref()))?;
    if let (Some(state), true) = (state, config.save_checkpoints) {
        state.save_checkpoint(&path.with_extension("ckpt"))?;
    }
    Ok(SeedOutcome {
        seed,
        records,
        path: path.to_path_buf(),
        error,
    })
}

fn finish(config: &ExperimentConfig, seeds: Vec<SeedOutcome>, summary_path: &Path) -> Result<RunOutput> {
    let per_seed: Vec<&[RunRecord]> = seeds.iter().map(|s| s.records.as_slice()).collect();
    let summary = summarize(&per_seed, config.eval_every, config.agent.total_steps);
    write_file(summary_path, &summary_csv(&summary))?;
    Ok(RunOutput {
        seeds,
        summary,
        summary_path: summary_path.to_path_buf(),
    })
}

/// Mean and sample standard deviation (n − 1; 0 for one seed) of the
/// rolling-100 return at every multiple of `every` up to `total` steps.
///
/// Each seed contributes its latest episode finished by that step; a point
/// is emitted only once every seed has one.
pub fn summarize(per_seed: &[&[RunRecord]], every: u64, total: u64) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    let mut cursors = vec![0usize; per_seed.len()];
    let mut t = every;
    while t <= total && !per_seed.is_empty() {
        let mut values = Vec::with_capacity(per_seed.len());
        for (records, cur) in per_seed.iter().zip(cursors.iter_mut()) {
            while *cur < records.len() && records[*cur].steps <= t {
                *cur += 1;
            }
            if *cur > 0 {
                values.push(records[*cur - 1].rolling100);
            }
        }
        if values.len() == per_seed.len() {
            let (mean, std) = mean_std(&values);
            rows.push(SummaryRow { steps: t, mean, std });
        }
        t += every;
    }
    rows
}

/// Mean and n − 1 standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Runs `work` over `jobs` on up to `workers` threads; results keep job order.
fn run_jobs<J, T, F>(jobs: &[J], workers: usize, work: F) -> Result<Vec<T>>
where
    J: Sync,
    T: Send,
    F: Fn(&J) -> Result<T> + Sync,
{
    let slots: Mutex<Vec<Option<Result<T>>>> = Mutex::new((0..jobs.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let threads = workers.clamp(1, jobs.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= jobs.len() {
                    break;
                }
                let out = work(&jobs[i]);
                slots.lock().unwrap_or_else(|p| p.into_inner())[i] = Some(out);
            });
        }
    });
    slots
        .into_inner()
        .unwrap_or_else(|p| p.into_inner())
        .into_iter()
        .map(|slot| slot.expect("every job ran"))
        .collect()
}

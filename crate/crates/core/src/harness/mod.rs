//! Seeded experiment execution, α sweeps, theory reports and CSV output.

mod analyze;
mod config;
mod csv;
mod run;

pub use analyze::{analysis_env, analyze, partial_sums_csv, resolve_policy, AnalyzeOutput, GammaVerdict};
pub use config::{default_out_dir, parse_seeds, ExperimentConfig, DEFAULT_ALPHAS, DEFAULT_STEPS, OUT_ENV_VAR};
pub use csv::{error_marker, run_csv, summary_csv, SummaryRow, RUN_HEADER, SUMMARY_HEADER};
pub use run::{mean_std, run, summarize, sweep_agent, sweep_alpha, RunOutput, SeedOutcome, SweepOutput};

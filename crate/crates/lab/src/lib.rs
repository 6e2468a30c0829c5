//! Experiment runner for the `wavespeed-core` numerics: TOML configuration,
//! CSV artifacts and a JSON summary.

pub mod config;
pub mod experiments;
pub mod output;
pub mod runner;

use std::path::Path;

use anyhow::{Context as _, Result};

use config::{execution_order, ExperimentConfig};
use experiments::{run_one, Context};
use output::{write_summary, Status, Summary};
use runner::PoolRunner;

/// Runs the configured experiments into `out` and writes `summary.json`.
/// Returns the summary; experiment errors are recorded there, not raised.
pub fn run(config: &ExperimentConfig, out: &Path, threads: usize) -> Result<Summary<ExperimentConfig>> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let coef = config.build_coefficient()?;
    let mut ctx = Context { config, coef, out, runner: PoolRunner::new(threads)?, validation_failed: None, interval: None };
    let experiments = execution_order(&config.experiments).into_iter().map(|name| run_one(&mut ctx, name)).collect();
    let summary = Summary { schema_version: output::SCHEMA_VERSION, seed: config.seed, config: config.clone(), experiments };
    write_summary(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

pub fn has_errors<C: serde::Serialize>(summary: &Summary<C>) -> bool {
    summary.experiments.iter().any(|e| e.status == Status::Error)
}

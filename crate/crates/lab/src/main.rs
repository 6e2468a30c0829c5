use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use wavespeed::config::{ExperimentConfig, ExperimentName};

/// Runs wave-equation experiments described by a TOML config.
#[derive(Parser, Debug)]
#[command(name = "wavespeed", version)]
struct Args {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Seed for randomized sampling; overrides `seed` from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Experiment to run (repeatable); replaces the config's list.
    #[arg(long = "experiment", value_parser = ExperimentName::parse)]
    experiments: Vec<ExperimentName>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let mut config = match ExperimentConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if !args.experiments.is_empty() {
        config.experiments = args.experiments;
    }
    let out = args.out.or_else(|| config.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
    match wavespeed::run(&config, &out, args.threads) {
        Ok(summary) => {
            for e in &summary.experiments {
                let verdict = match e.pass {
                    Some(true) => "pass",
                    Some(false) => "fail",
                    None => "-",
                };
                println!("{:<15} {:<8} {}", e.name, format!("{:?}", e.status).to_lowercase(), verdict);
                if let Some(m) = &e.message {
                    println!("{:<15} {m}", "");
                }
            }
            if wavespeed::has_errors(&summary) {
                ExitCode::FAILURE
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

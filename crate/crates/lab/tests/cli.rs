use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use wavespeed::config::{ExperimentConfig, ExperimentName};
use wavespeed::output::Status;

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wavespeed"))
}

const QUICK: &str = r#"
seed = 7
experiments = ["validate", "zones", "floquet", "diag"]

[coefficient]
family = "polynomial"
p = 2.0
q = 1.0
r = 0.5

[perturbation]
kind = "admissible"

[floquet]
sweep_points = 20
step = 0.05

[diag]
points = 10
"#;

#[test]
fn shipped_configs_parse_and_round_trip() {
    let mut seen = 0;
    for entry in fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("toml") {
            continue;
        }
        let cfg = ExperimentConfig::load(&path).unwrap();
        cfg.build_coefficient().unwrap();
        let again = ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(cfg, again, "{}", path.display());
        seen += 1;
    }
    assert!(seen >= 4);
}

#[test]
fn runs_are_deterministic() {
    let cfg = ExperimentConfig::from_toml(QUICK).unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    wavespeed::run(&cfg, a.path(), 1).unwrap();
    wavespeed::run(&cfg, b.path(), 2).unwrap();
    for name in ["validate.csv", "zones.csv", "floquet.csv", "diag.csv", "summary.json"] {
        let x = fs::read(a.path().join(name)).unwrap();
        let y = fs::read(b.path().join(name)).unwrap();
        assert!(x == y, "{name} differs between runs");
    }
}

#[test]
fn failed_validation_skips_dependent_experiments() {
    let mut cfg = ExperimentConfig::load(&configs_dir().join("polynomial_counterexample.toml")).unwrap();
    cfg.experiments = vec![ExperimentName::Validate, ExperimentName::Propagate];
    let out = tempfile::tempdir().unwrap();
    let summary = wavespeed::run(&cfg, out.path(), 1).unwrap();
    assert_eq!(summary.experiments[0].pass, Some(false));
    assert_eq!(summary.experiments[1].status, Status::Skipped);
    assert!(!wavespeed::has_errors(&summary));
}

#[test]
fn failed_validation_is_not_an_error_exit() {
    let out = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["--config"])
        .arg(configs_dir().join("polynomial_counterexample.toml"))
        .arg("--out")
        .arg(out.path())
        .args(["--experiment", "validate"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let text = fs::read_to_string(out.path().join("validate.csv")).unwrap();
    assert!(text.lines().any(|l| l.starts_with("A4'',fail")), "{text}");
}

#[test]
fn bad_config_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, "[coefficient]\nfamily = \"polynomial\"\np = 2.0\nalpha = 0.5\n").unwrap();
    let status = bin().arg("--config").arg(&path).arg("--out").arg(dir.path().join("out")).status().unwrap();
    assert_eq!(status.code(), Some(2));
    let status = bin().args(["--config", "/nonexistent.toml"]).status().unwrap();
    assert_eq!(status.code(), Some(2));
}

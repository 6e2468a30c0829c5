//! CSV artifacts and the JSON summary.

use std::path::Path;

use anyhow::Result;
use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

/// Fixed 17-significant-digit formatting so that reruns are byte-identical.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Skipped,
    Error,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentSummary {
    pub name: String,
    pub status: Status,
    /// `Some(true)` when the experiment's property held; counterexample
    /// failures are findings and still have `status = ok`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pass: Option<bool>,
    pub artifacts: Vec<String>,
    pub witness: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary<C: Serialize> {
    pub schema_version: u32,
    pub seed: u64,
    pub config: C,
    pub experiments: Vec<ExperimentSummary>,
}

pub fn write_summary<C: Serialize>(path: &Path, summary: &Summary<C>) -> Result<()> {
    let text = serde_json::to_string_pretty(summary)?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

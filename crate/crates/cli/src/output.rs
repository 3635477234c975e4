//! Deterministic output files.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::CliError;
use crate::run::RunOutput;

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn write_trajectory(path: &Path, out: &RunOutput) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(&out.header)?;
    for row in &out.rows {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Write trajectory.csv and summary.json into `dir`.
pub fn write_run(dir: &Path, out: &RunOutput) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    write_trajectory(&dir.join("trajectory.csv"), out)?;
    write_json(&dir.join("summary.json"), &out.summary)
}

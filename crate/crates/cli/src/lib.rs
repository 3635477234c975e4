//! Command-line front end: scenario files, closed-loop runs, verification
//! reports and the DP oracle.

pub mod config;
pub mod error;
pub mod oracle;
pub mod output;
pub mod run;
pub mod scenario;
pub mod verify;

use std::path::{Path, PathBuf};

use hjbex::exec::Exec;
use serde_json::json;

pub use config::ScenarioConfig;
pub use error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Run,
    Verify,
    Oracle,
}

/// Execute one command on one scenario, writing its files into `out`.
pub fn execute(command: Command, cfg: &ScenarioConfig, out: &Path, seed: u64, exec: Exec) -> Result<(), CliError> {
    std::fs::create_dir_all(out)?;
    match command {
        Command::Run => output::write_run(out, &run::run(cfg)?),
        Command::Verify => {
            let report = verify::verify(cfg, seed, exec)?;
            let doc = json!({
                "model": report.model,
                "seed": seed,
                "passed": report.passed(),
                "checks": report.checks,
                "config": cfg,
            });
            output::write_json(&out.join("report.json"), &doc)?;
            match report.failures().count() {
                0 => Ok(()),
                failed => Err(CliError::Tolerance { failed }),
            }
        }
        Command::Oracle => {
            let o = oracle::oracle(cfg, exec)?;
            output::write_json(&out.join("report.json"), &o.report)?;
            if o.passed {
                Ok(())
            } else {
                Err(CliError::Tolerance { failed: 1 })
            }
        }
    }
}

/// Output directory of each config: `out` itself for a single config, else
/// one subdirectory per config named after its file stem.
pub fn output_dirs(configs: &[PathBuf], out: &Path) -> Vec<PathBuf> {
    if configs.len() == 1 {
        return vec![out.to_path_buf()];
    }
    let stems: Vec<String> = configs
        .iter()
        .map(|p| p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "scenario".into()))
        .collect();
    stems
        .iter()
        .enumerate()
        .map(|(k, s)| {
            if stems.iter().filter(|t| *t == s).count() > 1 {
                out.join(format!("{k}-{s}"))
            } else {
                out.join(s)
            }
        })
        .collect()
}

/// Load, refine and execute every config; results keep the input order.
pub fn execute_batch(
    command: Command,
    configs: &[PathBuf],
    out: &Path,
    refine: u32,
    seed: u64,
    exec: Exec,
) -> Vec<Result<(), CliError>> {
    let dirs = output_dirs(configs, out);
    let jobs: Vec<(&PathBuf, &PathBuf)> = configs.iter().zip(&dirs).collect();
    exec.map(&jobs, |(path, dir)| {
        let cfg = ScenarioConfig::load(path)?.refined(refine);
        execute(command, &cfg, dir, seed, exec)
    })
}

use std::fs;
use std::path::Path;
use std::process::Command;

use hjbex_cli::ScenarioConfig;
use serde_json::Value;

fn hjbex(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_hjbex")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn write_config(dir: &Path, name: &str, cfg: &ScenarioConfig) -> String {
    let path = dir.join(format!("{name}.toml"));
    fs::write(&path, cfg.to_toml()).unwrap();
    path.to_string_lossy().into_owned()
}

fn small(model: &str) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::default_for(model).unwrap();
    cfg.numerics.n = 64;
    cfg.numerics.m = 100;
    cfg.numerics.age_cells = 100;
    cfg.numerics.dt = 0.05;
    cfg
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn run_writes_table_and_summary_that_feeds_back() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "ttb", &small("time-to-build"));
    let out = dir.path().join("a");
    assert_eq!(hjbex(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]).0, 0);
    let mut reader = csv::Reader::from_path(out.join("trajectory.csv")).unwrap();
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header[0], "t");
    assert!(header.contains(&"running_payoff".to_string()));
    assert_eq!(reader.records().count(), 20 * 100 + 1);
    let summary = json(&out.join("summary.json"));
    assert!(summary["results"]["value_gap"].as_f64().unwrap() < 5e-3);

    let again = dir.path().join("b");
    let summary_path = out.join("summary.json");
    assert_eq!(hjbex(&["run", "--config", summary_path.to_str().unwrap(), "--out", again.to_str().unwrap()]).0, 0);
    assert_eq!(fs::read(out.join("summary.json")).unwrap(), fs::read(again.join("summary.json")).unwrap());
    assert_eq!(fs::read(out.join("trajectory.csv")).unwrap(), fs::read(again.join("trajectory.csv")).unwrap());
}

#[test]
fn assumption_failure_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small("vintage-dde");
    if let hjbex_cli::config::ModelConfig::VintageDde(c) = &mut cfg.model {
        c.scrapping_time = 0.5;
    }
    let path = write_config(dir.path(), "v", &cfg);
    let (code, err) = hjbex(&["run", "--config", &path, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("vintage growth assumption"), "{err}");
}

#[test]
fn tightened_tolerance_exits_with_three_and_reports_gap() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small("pollution");
    cfg.tolerances.residual = 1e-12;
    let path = write_config(dir.path(), "p", &cfg);
    let out = dir.path().join("o");
    let (code, _) = hjbex(&["verify", "--config", &path, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 3);
    let report = json(&out.join("report.json"));
    assert_eq!(report["passed"], false);
    let failed: Vec<&Value> = report["checks"].as_array().unwrap().iter().filter(|c| c["passed"] == false).collect();
    assert_eq!(failed.len(), 1);
    assert_eq!(failed[0]["name"], "hjb_residual_max");
    assert!(failed[0]["measured"].as_f64().unwrap() > 1e-12);
}

#[test]
fn state_outside_feedback_domain_exits_with_four() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small("time-to-build");
    if let hjbex_cli::config::ModelConfig::TimeToBuild(c) = &mut cfg.model {
        c.control_history = hjbex_cli::config::HistoryProfile::Constant { value: 20.0 };
    }
    let path = write_config(dir.path(), "t", &cfg);
    let (code, err) = hjbex(&["run", "--config", &path, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code, 4, "{err}");
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    let text = small("pollution").to_toml().replace("[numerics]", "[numerics]\nspeed = 3");
    fs::write(&path, text).unwrap();
    let (code, err) = hjbex(&["run", "--config", path.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("speed"), "{err}");
}

#[test]
fn batch_writes_one_directory_per_config() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_config(dir.path(), "pollution", &small("pollution"));
    let b = write_config(dir.path(), "transport", &small("vintage-transport"));
    let out = dir.path().join("o");
    assert_eq!(hjbex(&["run", "--config", &a, "--config", &b, "--out", out.to_str().unwrap()]).0, 0);
    assert!(out.join("pollution/summary.json").exists());
    assert!(out.join("transport/trajectory.csv").exists());
}

#[test]
fn refine_flag_shrinks_residual_at_second_order() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "s", &small("spatial-growth"));
    let mut max = Vec::new();
    for k in ["0", "1"] {
        let out = dir.path().join(k);
        assert_eq!(hjbex(&["verify", "--config", &path, "--out", out.to_str().unwrap(), "--refine", k]).0, 0);
        let report = json(&out.join("report.json"));
        assert_eq!(report["config"]["numerics"]["n"], if k == "0" { 64 } else { 128 });
        let c = report["checks"].as_array().unwrap().iter().find(|c| c["name"] == "hjb_residual_max").unwrap().clone();
        max.push(c["measured"].as_f64().unwrap());
    }
    assert!(max[0] / max[1] > 3.5, "{max:?}");
}

#[test]
fn seed_changes_only_sampled_states() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small("pollution");
    cfg.tolerances.residual = 1e-4;
    let path = write_config(dir.path(), "p", &cfg);
    let mut reports = Vec::new();
    for seed in ["1", "2"] {
        let out = dir.path().join(seed);
        assert_eq!(hjbex(&["verify", "--config", &path, "--out", out.to_str().unwrap(), "--seed", seed]).0, 0);
        reports.push(json(&out.join("report.json")));
    }
    let get = |r: &Value, name: &str| r["checks"].as_array().unwrap().iter().find(|c| c["name"] == name).unwrap()["measured"].clone();
    assert_ne!(get(&reports[0], "hjb_residual_max"), get(&reports[1], "hjb_residual_max"));
    assert_eq!(get(&reports[0], "value_match_gap"), get(&reports[1], "value_match_gap"));
}

#[test]
fn oracle_single_level_is_the_center_policy() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ScenarioConfig::default_for("vintage-dde").unwrap();
    cfg.oracle.levels = 1;
    let path = write_config(dir.path(), "v", &cfg);
    let out = dir.path().join("o");
    hjbex(&["oracle", "--config", &path, "--out", out.to_str().unwrap()]);
    let r = json(&out.join("report.json"));
    let center = r["dp"]["center_value"].as_f64().unwrap();
    for k in 0..2 {
        assert!((r["dp"]["bracket"][k].as_f64().unwrap() - center).abs() < 1e-12 * center.abs());
    }
}

#[test]
fn oracle_budget_exceeded_writes_partial_report() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ScenarioConfig::default_for("time-to-build").unwrap();
    cfg.oracle.budget = 1000;
    let path = write_config(dir.path(), "t", &cfg);
    let out = dir.path().join("o");
    let (code, _) = hjbex(&["oracle", "--config", &path, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 3);
    let r = json(&out.join("report.json"));
    assert_eq!(r["status"], "partial");
    assert!(r["needed"].as_u64().unwrap() > 1000);
}

#[test]
fn oracle_rejects_pde_models() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "p", &small("pollution"));
    let (code, err) = hjbex(&["oracle", "--config", &path, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("delay models"), "{err}");
}

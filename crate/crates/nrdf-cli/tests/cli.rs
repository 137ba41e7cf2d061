//! End-to-end checks of the binary: exit codes, output determinism, and the
//! JSON/CSV surfaces.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../examples")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nrdf"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_temp(value: &Value) -> tempfile::NamedTempFile {
    let file = tempfile::NamedTempFile::new().unwrap();
    std::fs::write(file.path(), serde_json::to_string_pretty(value).unwrap()).unwrap();
    file
}

fn load_fixture(name: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(fixture(name)).unwrap()).unwrap()
}

#[test]
fn waterfill_reports_rate_and_allocation() {
    let out = run(&["waterfill", "--config", fixture("ex51.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["rate_bits"].is_number());
    assert!(v["water_level"].is_number());
    assert!(v["iterations"].as_u64().unwrap() >= 1);
    assert_eq!(v["deltas"].as_array().unwrap().len(), 3);
    assert_eq!(v["pred_cov"][0].as_array().unwrap().len(), 2);
}

#[test]
fn missing_model_stage_exits_three_naming_the_sequence() {
    let mut cfg = load_fixture("ex51.json");
    let b = cfg["model"]["b_seq"].as_array().unwrap()[..2].to_vec();
    cfg["model"]["b_seq"] = Value::Array(b);
    let file = write_temp(&cfg);
    let out = run(&["waterfill", "--config", file.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("b_seq"), "diagnostic must name the field: {stderr}");
}

#[test]
fn unknown_config_field_exits_three() {
    let mut cfg = load_fixture("ex51.json");
    cfg["mystery"] = Value::from(1);
    let file = write_temp(&cfg);
    let out = run(&["waterfill", "--config", file.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("mystery"));
}

#[test]
fn exhausted_solver_exits_two() {
    let mut cfg = load_fixture("ex51.json");
    // A feasible budget that cannot meet an impossible tolerance in two
    // sweeps (the configured budget saturates instantly and would exit 0).
    cfg["distortion_d"] = Value::from(1.0);
    cfg["solver"] = serde_json::json!({"tolerance_eps": 1e-12, "max_iterations": 2});
    let file = write_temp(&cfg);
    let out = run(&["waterfill", "--config", file.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("converge"));
}

#[test]
fn usage_errors_exit_three_and_help_exits_zero() {
    let out = run(&["waterfill", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(3));
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn simulation_output_is_byte_identical_per_seed() {
    let config = fixture("ex51.json");
    let args = [
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--trajectories",
        "40",
        "--format",
        "csv",
    ];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);

    let mut seeded = args.to_vec();
    seeded.extend_from_slice(&["--seed", "9"]);
    let c = run(&seeded);
    assert_eq!(c.status.code(), Some(0));
    assert_ne!(a.stdout, c.stdout);

    let text = String::from_utf8(a.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,analytic_delta,empirical_mse,stderr"));
    assert_eq!(lines.count(), 3);
}

#[test]
fn bar_chart_csv_has_one_row_per_stage_and_coordinate() {
    let out = run(&[
        "waterfill",
        "--config",
        fixture("ex51.json").to_str().unwrap(),
        "--format",
        "csv",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,i,lambda,delta,xi"));
    assert_eq!(lines.count(), 6, "3 stages x 2 coordinates");
}

#[test]
fn out_flag_writes_the_file_instead_of_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("result.json");
    let out = run(&[
        "rate",
        "--config",
        fixture("ex52.json").to_str().unwrap(),
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert!(v["total_rate_bits"].is_number());
}

#[test]
fn channel_match_requires_a_scalar_source() {
    let mut cfg = load_fixture("ex51.json");
    cfg["channel"] = serde_json::json!({
        "powers": [1.0, 1.0, 1.0],
        "noise_vars": [1.0, 1.0, 1.0]
    });
    let file = write_temp(&cfg);
    let out = run(&["channel-match", "--config", file.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("scalar"));
}

#[test]
fn drf_requires_a_target_rate() {
    let out = run(&["drf", "--config", fixture("ex51.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("target_rate_bits"));
}

#[test]
fn channel_match_embeds_a_seeded_simulation() {
    let out = run(&[
        "channel-match",
        "--config",
        fixture("ex52.json").to_str().unwrap(),
        "--trajectories",
        "200",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["d_min"].as_f64().unwrap(), 1.975 / 3.0);
    assert_eq!(v["sim"]["num_trajectories"].as_u64(), Some(200));
    assert_eq!(v["sim"]["per_time_mse"].as_array().unwrap().len(), 3);
}

#[test]
fn uppercase_distortion_alias_is_accepted() {
    let mut cfg = load_fixture("ex51.json");
    let d = cfg.as_object_mut().unwrap().remove("distortion_d").unwrap();
    cfg["distortion_D"] = d;
    let file = write_temp(&cfg);
    let out = run(&["waterfill", "--config", file.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
}

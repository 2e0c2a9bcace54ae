//! End-to-end tests of the binary: exit-code contract, artifact schemas,
//! determinism, and the sweep table.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fwids_core::ExperimentConfig;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fwids"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Per-test scratch directory under the system temp dir.
fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("fwids-cli-{}-{name}", std::process::id()));
    fs::create_dir_all(&dir).expect("scratch dir");
    dir
}

fn short_floor(t_end: f64) -> ExperimentConfig {
    let mut cfg = fwids_core::preset("table1-floor-flower").expect("shipped preset");
    cfg.sim.t_end = t_end;
    cfg
}

fn write_cfg(dir: &Path, name: &str, cfg: &ExperimentConfig) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(cfg).expect("serializes")).expect("written");
    path
}

#[test]
fn certify_preset_passes_and_writes_certificate() {
    let dir = scratch("certify-pass");
    let cert_path = dir.join("cert.json");
    let out = run(&[
        "certify",
        "--preset",
        "table1-floor-flower",
        "--out",
        cert_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("certificate: PASS"));

    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&cert_path).unwrap()).unwrap();
    assert_eq!(doc["pass"], serde_json::Value::Bool(true));
    let threshold = doc["threshold"].as_f64().unwrap();
    assert!((threshold - 1.5388).abs() < 1e-3, "threshold {threshold}");
    assert!(doc["constants"]["sigma_j"].as_f64().unwrap() > 4.0);
}

#[test]
fn certify_weak_gains_exits_one() {
    let dir = scratch("certify-weak");
    let mut cfg = short_floor(1.0);
    cfg.pi_gains.kp = [1.0, 1.0, 1.0];
    let path = write_cfg(&dir, "weak.json", &cfg);
    let out = run(&["certify", "--config", path.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("certificate: FAIL"));
}

#[test]
fn certify_malformed_config_exits_two() {
    let dir = scratch("certify-malformed");
    let path = dir.join("broken.json");
    fs::write(&path, r#"{"robot": {"r": 0.0254,"#).unwrap();
    let out = run(&["certify", "--config", path.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("parsing"));
}

#[test]
fn missing_source_exits_two() {
    let out = run(&["certify"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("--config or --preset"));
}

#[test]
fn unknown_preset_exits_two() {
    let out = run(&["simulate", "--preset", "table9-does-not-exist"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("unknown preset"));
    assert!(stderr(&out).contains("table1-floor-flower"));
}

#[test]
fn simulate_writes_expected_row_count() {
    let dir = scratch("simulate-rows");
    let cfg_path = write_cfg(&dir, "run.json", &short_floor(0.5));
    let trace_path = dir.join("trace.csv");
    let out = run(&[
        "simulate",
        "--config",
        cfg_path.to_str().unwrap(),
        "--trace",
        trace_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let text = fs::read_to_string(&trace_path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    // Header plus one row per millisecond step, initial sample included.
    assert_eq!(lines.len(), 1 + 501);
    assert!(lines[0].starts_with("t,x,y,"));
    assert!(stdout(&out).contains("501 rows"));
}

#[test]
fn simulate_zero_horizon_records_single_row() {
    let dir = scratch("simulate-zero");
    let cfg_path = write_cfg(&dir, "run.json", &short_floor(0.0));
    let trace_path = dir.join("trace.csv");
    let out = run(&[
        "simulate",
        "--quiet",
        "--config",
        cfg_path.to_str().unwrap(),
        "--trace",
        trace_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let text = fs::read_to_string(&trace_path).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(stdout(&out).is_empty(), "--quiet must silence the summary");
}

#[test]
fn simulate_without_destination_streams_to_stdout() {
    let dir = scratch("simulate-stdout");
    let cfg_path = write_cfg(&dir, "run.json", &short_floor(0.01));
    let out = run(&["simulate", "--config", cfg_path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let body = stdout(&out);
    assert!(body.starts_with("t,x,y,"));
    assert_eq!(body.lines().count(), 1 + 11);
    // The human summary stays off the data stream.
    assert!(stderr(&out).contains("rows"));
}

#[test]
fn simulate_is_deterministic_byte_for_byte() {
    let dir = scratch("simulate-repro");
    let cfg_path = write_cfg(&dir, "run.json", &short_floor(0.3));
    let a = dir.join("a.csv");
    let b = dir.join("b.csv");
    for path in [&a, &b] {
        let out = run(&[
            "simulate",
            "--quiet",
            "--config",
            cfg_path.to_str().unwrap(),
            "--trace",
            path.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn analyze_validates_recorded_trace_and_passes() {
    let dir = scratch("analyze-pass");
    let cfg_path = write_cfg(&dir, "run.json", &short_floor(1.0));
    let trace_path = dir.join("trace.csv");
    run(&[
        "simulate",
        "--quiet",
        "--config",
        cfg_path.to_str().unwrap(),
        "--trace",
        trace_path.to_str().unwrap(),
    ]);
    let report_path = dir.join("report.json");
    let out = run(&[
        "analyze",
        "--config",
        cfg_path.to_str().unwrap(),
        "--trace",
        trace_path.to_str().unwrap(),
        "--out",
        report_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("passivity identity: PASS"), "{text}");
    assert!(text.contains("derivative bound:   PASS"), "{text}");
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(doc["all_pass"], serde_json::Value::Bool(true));
}

#[test]
fn analyze_rejects_truncated_trace() {
    let dir = scratch("analyze-truncated");
    let cfg_path = write_cfg(&dir, "run.json", &short_floor(0.05));
    let trace_path = dir.join("trace.csv");
    run(&[
        "simulate",
        "--quiet",
        "--config",
        cfg_path.to_str().unwrap(),
        "--trace",
        trace_path.to_str().unwrap(),
    ]);
    // Cut the second line (first data row) short mid-number.
    let text = fs::read_to_string(&trace_path).unwrap();
    let second_newline = text
        .match_indices('\n')
        .nth(1)
        .map(|(i, _)| i)
        .expect("two lines");
    fs::write(&trace_path, &text[..second_newline - 3]).unwrap();
    let out = run(&[
        "analyze",
        "--config",
        cfg_path.to_str().unwrap(),
        "--trace",
        trace_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2, "stderr: {}", stderr(&out));
    assert!(stderr(&out).contains("line 2"));
}

#[test]
fn analyze_detects_tampered_trace() {
    let dir = scratch("analyze-tampered");
    let cfg_path = write_cfg(&dir, "run.json", &short_floor(0.05));
    let trace_path = dir.join("trace.csv");
    run(&[
        "simulate",
        "--quiet",
        "--config",
        cfg_path.to_str().unwrap(),
        "--trace",
        trace_path.to_str().unwrap(),
    ]);
    // Prefix a digit to the last row's time stamp: still well-formed CSV,
    // but no longer the trace this experiment produces.
    let text = fs::read_to_string(&trace_path).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_owned).collect();
    let last = lines.last_mut().unwrap();
    *last = format!("9{last}");
    fs::write(&trace_path, lines.join("\n") + "\n").unwrap();
    let out = run(&[
        "analyze",
        "--config",
        cfg_path.to_str().unwrap(),
        "--trace",
        trace_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("does not match"), "{}", stderr(&out));
}

#[test]
fn analyze_uncertified_gains_warns_but_passes() {
    let dir = scratch("analyze-uncertified");
    let mut cfg = short_floor(0.5);
    cfg.pi_gains.kp = [1.0, 1.0, 1.0];
    let cfg_path = write_cfg(&dir, "weak.json", &cfg);
    let out = run(&["analyze", "--config", cfg_path.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("uncertified"));
    assert!(stderr(&out).contains("warning"));
}

#[test]
fn sweep_certificate_flips_at_the_gain_threshold() {
    let dir = scratch("sweep-flip");
    let cfg_path = write_cfg(&dir, "base.json", &short_floor(0.2));
    let table_path = dir.join("sweep.csv");
    let out = run(&[
        "sweep",
        "--config",
        cfg_path.to_str().unwrap(),
        "--param",
        "pi_gains.kp.0",
        "--values",
        "0.5,1.0,1.563,3.0",
        "--out",
        table_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let text = fs::read_to_string(&table_path).unwrap();
    let rows: Vec<Vec<&str>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows.len(), 4);
    let certified: Vec<&str> = rows.iter().map(|r| r[1]).collect();
    assert_eq!(certified, ["false", "false", "true", "true"]);
    for row in &rows {
        assert_eq!(row[2], "true", "every short run completes: {row:?}");
    }
}

#[test]
fn sweep_sets_integer_fields() {
    let dir = scratch("sweep-integer");
    let cfg_path = write_cfg(&dir, "base.json", &short_floor(0.2));
    let out = run(&[
        "sweep",
        "--config",
        cfg_path.to_str().unwrap(),
        "--param",
        "sim.record_stride",
        "--values",
        "10",
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let body = stdout(&out);
    assert_eq!(body.lines().count(), 2);
    assert!(body.lines().nth(1).unwrap().contains("true"));
}

#[test]
fn sweep_empty_values_exits_two() {
    let dir = scratch("sweep-empty");
    let cfg_path = write_cfg(&dir, "base.json", &short_floor(0.2));
    let out = run(&[
        "sweep",
        "--config",
        cfg_path.to_str().unwrap(),
        "--param",
        "pi_gains.kp.0",
        "--values",
        "",
    ]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("at least one"));
}

#[test]
fn sweep_unknown_param_exits_two() {
    let dir = scratch("sweep-unknown");
    let cfg_path = write_cfg(&dir, "base.json", &short_floor(0.2));
    let out = run(&[
        "sweep",
        "--config",
        cfg_path.to_str().unwrap(),
        "--param",
        "pi_gains.kq.0",
        "--values",
        "1.0",
    ]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("kq"));
}

//! Exit-code contract, report determinism, and schema round-trips, driven
//! through the actual binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_jsrbound")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn jsr_config(report: &str) -> String {
    format!(
        r#"{{
  "version": 1,
  "kind": "jsr",
  "jsr": {{
    "matrices": [[[0.5, 0.1], [0.0, 0.4]], [[0.3, 0.0], [0.2, 0.6]]],
    "constraint": [[1, 1], [1, 0]],
    "max_n": 6,
    "seed": 7,
    "robust": {{"epsilon": 0.05, "samples": 4}}
  }},
  "out": {{"report": "{report}", "trace_csv": "trace.csv"}}
}}"#
    )
}

#[test]
fn malformed_config_corpus_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cases: Vec<(&str, String)> = vec![
        ("not_json.json", "{ nope".into()),
        (
            "bad_version.json",
            r#"{"version": 99, "kind": "jsr", "jsr": {"matrices": [[[1.0]]], "constraint": [[1]], "max_n": 2}}"#.into(),
        ),
        (
            "missing_payload.json",
            r#"{"version": 1, "kind": "jsr"}"#.into(),
        ),
        (
            "unknown_field.json",
            r#"{"version": 1, "kind": "jsr", "jsr": {"matrices": [[[1.0]]], "constraint": [[1]], "max_n": 2, "bogus": 1}}"#.into(),
        ),
        (
            "robust_without_seed.json",
            r#"{"version": 1, "kind": "jsr", "jsr": {"matrices": [[[1.0]]], "constraint": [[1]], "max_n": 2, "robust": {"epsilon": 0.1, "samples": 2}}}"#.into(),
        ),
        (
            "non_stochastic.json",
            r#"{"version": 1, "kind": "markov", "markov": {"matrices": [[[1.0]], [[1.0]]], "transition": [[0.6, 0.6], [0.5, 0.5]], "seed": 1}}"#.into(),
        ),
    ];
    for (name, text) in cases {
        let path = write(dir.path(), name, &text);
        let kind = if name.contains("stochastic") { "markov" } else { "jsr" };
        let out = run(&[kind, "--config", &path]);
        assert_eq!(
            out.status.code(),
            Some(2),
            "case {name}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn trim_empty_constraint_exits_2_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{
  "version": 1, "kind": "jsr",
  "jsr": {"matrices": [[[0.5]], [[0.5]]], "constraint": [[0, 1], [0, 0]], "max_n": 4}
}"#;
    let path = write(dir.path(), "trim_empty.json", cfg);
    let out = run(&["jsr", "--config", &path]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("trim"),
        "diagnostic should mention trimming, got: {stderr}"
    );
}

#[test]
fn kind_subcommand_mismatch_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "cfg.json", &jsr_config("r.json"));
    let out = run(&["markov", "--config", &path]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn successful_run_exits_0_and_report_reparses() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "cfg.json", &jsr_config("report.json"));
    let out_dir = dir.path().join("out");
    let out = run(&[
        "jsr",
        "--config",
        &path,
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = fs::read_to_string(out_dir.join("report.json")).unwrap();
    let report: serde_json::Value = serde_json::from_str(&text).unwrap();
    for key in [
        "version",
        "kind",
        "config_sha256",
        "seed",
        "threads",
        "oracle_mode",
        "results",
        "notes",
        "numeric_flags",
        "timing",
    ] {
        assert!(report.get(key).is_some(), "missing report key {key}");
    }
    assert_eq!(report["kind"], "jsr");
    assert_eq!(report["numeric_flags"].as_array().unwrap().len(), 0);
    // re-serializing the parsed report is stable (schema round-trip)
    let re: serde_json::Value =
        serde_json::from_str(&serde_json::to_string(&report).unwrap()).unwrap();
    assert_eq!(report, re);
    // trace CSV exists with a header and one row per n
    let csv = fs::read_to_string(out_dir.join("trace.csv")).unwrap();
    assert!(csv.starts_with("n,lower,upper\n"));
    assert_eq!(csv.lines().count(), 1 + 6);
}

#[test]
fn scalar_half_config_brackets_and_certifies_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{
  "version": 1, "kind": "jsr",
  "jsr": {"matrices": [[[0.5]]], "constraint": [[1]], "max_n": 5},
  "out": {"report": "scalar.json"}
}"#;
    let path = write(dir.path(), "scalar.json", cfg);
    let out = run(&[
        "jsr",
        "--config",
        &path,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("scalar.json")).unwrap())
            .unwrap();
    let bracket = &report["results"]["bracket"];
    assert!((bracket["lower_sup"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!((bracket["upper_inf"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    let cert = &report["results"]["certificate"];
    assert!((cert["c"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!((cert["gamma"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert_eq!(cert["witness_n"], 1);
}

#[test]
fn numeric_flag_exits_3() {
    // a zero matrix forces an exactly zero product: degenerate MC estimate
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{
  "version": 1, "kind": "markov",
  "markov": {
    "matrices": [[[0.0]]],
    "transition": [[1.0]],
    "seed": 3,
    "mc": {"length": 50, "trials": 2}
  },
  "out": {"report": "degenerate.json"}
}"#;
    let path = write(dir.path(), "cfg.json", cfg);
    let out = run(&[
        "markov",
        "--config",
        &path,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("degenerate.json")).unwrap())
            .unwrap();
    assert!(!report["numeric_flags"].as_array().unwrap().is_empty());
}

#[test]
fn seed_override_is_echoed() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "cfg.json", &jsr_config("report.json"));
    let out_dir = dir.path().join("out");
    let out = run(&[
        "jsr",
        "--config",
        &path,
        "--out",
        out_dir.to_str().unwrap(),
        "--seed-override",
        "99",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["seed"], 99);
}

#[test]
fn oracle_mode_reproduces_the_bracket() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "cfg.json", &jsr_config("report.json"));
    let fast_dir = dir.path().join("fast");
    let slow_dir = dir.path().join("slow");
    assert_eq!(
        run(&["jsr", "--config", &path, "--out", fast_dir.to_str().unwrap()])
            .status
            .code(),
        Some(0)
    );
    assert_eq!(
        run(&[
            "jsr",
            "--config",
            &path,
            "--out",
            slow_dir.to_str().unwrap(),
            "--oracle-mode"
        ])
        .status
        .code(),
        Some(0)
    );
    let read = |d: &Path| -> serde_json::Value {
        serde_json::from_str(&fs::read_to_string(d.join("report.json")).unwrap()).unwrap()
    };
    let fast = read(&fast_dir);
    let slow = read(&slow_dir);
    assert_eq!(fast["results"]["bracket"], slow["results"]["bracket"]);
    assert_ne!(fast["oracle_mode"], slow["oracle_mode"]);
}

#[test]
fn env_var_sets_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "cfg.json", &jsr_config("report.json"));
    let out_dir = dir.path().join("via_env");
    let out = Command::new(bin())
        .args(["jsr", "--config", &path])
        .env("JSRBOUND_OUT_DIR", &out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(out_dir.join("report.json").exists());
}

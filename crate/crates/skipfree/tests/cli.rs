//! End-to-end CLI tests: exit codes, CSV shapes, and the determinism
//! guarantee (criterion 11): same seed, different worker counts, byte
//! identical outputs.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_skipfree"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn scale_emits_expected_rows_and_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "mm1.json", r#"{"kind": "mm1", "lambda": 1.0, "mu": 1.0}"#);
    let out = dir.path().join("f.csv");
    let status = bin()
        .args(["scale", "--config", &cfg, "--n-max", "10", "--out", out.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 12); // header + rows n = 0..=10
    assert_eq!(lines[0], "n,m_n,f_n");
    // f_3 = 6 for the critical chain at lambda = 1
    assert!(lines[4].starts_with("3,"));
    assert!(lines[4].ends_with("6.0000000000000000e0"));
}

#[test]
fn scale_invert_emits_inverse_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "cat.json", r#"{"kind": "catastrophe", "lambda": 1.0, "mu": 1.0}"#);
    let output = bin()
        .args(["scale", "--config", &cfg, "--n-max", "10", "--invert", "7,1"])
        .output()
        .unwrap();
    assert!(output.status.success());
    let text = String::from_utf8(output.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,g_t,floor_g,ceil_g");
    // g(7) = log2(8) = 3 exactly (knot)
    assert!(lines[1].contains("3.0000000000000000e0,3,3"));
    // f_1 = 1: g(1) = 1
    assert!(lines[2].contains("1.0000000000000000e0,1,1"));
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.json", r#"{"kind": "mm1", "lambda": 1.0}"#);
    let status = bin()
        .args(["scale", "--config", &cfg, "--n-max", "10"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    // unknown CLI flag is also 2 (clap default)
    let status = bin().args(["scale", "--frobnicate"]).status().unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn validate_reports_violations_with_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let good = write_config(dir.path(), "ok.json", r#"{"kind": "mm1", "lambda": 1.0, "mu": 2.0}"#);
    assert!(bin().args(["validate", "--config", &good, "--up-to", "50"]).status().unwrap().success());
    let bad = write_config(
        dir.path(),
        "skip.json",
        r#"{"kind": "explicit", "rates": [[0, 1, 1.0], [0, 2, 0.5], [1, 2, 1.0], [2, 3, 1.0]], "state_cap": 3}"#,
    );
    let out = bin().args(["validate", "--config", &bad, "--up-to", "2"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("not skip-free"));
}

#[test]
fn layer_cake_lab_passes() {
    let out = bin()
        .args(["lab", "layer-cake", "--trials", "100", "--seed", "7"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS layer-cake"));
}

#[test]
fn legacy_subcommand_aliases_work() {
    // older descriptor names kept as hidden aliases
    let out = bin()
        .args(["lab", "lemma71", "--trials", "100", "--seed", "7"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS layer-cake"));

    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "mm1.json", r#"{"kind": "mm1", "lambda": 1.0, "mu": 1.0}"#);
    let out = bin()
        .args(["check", "jia", "--config", &cfg, "--beta", "2", "--k-max", "200"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("passes=true"));
}

#[test]
fn simulate_csv_has_one_row_per_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "mm1.json", r#"{"kind": "mm1", "lambda": 1.0, "mu": 1.0}"#);
    let out = dir.path().join("paths.csv");
    let status = bin()
        .args([
            "simulate", "--config", &cfg, "--rule", "min:5,10", "--paths", "250", "--seed", "3",
            "--out", out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 251);
    assert_eq!(text.lines().next().unwrap(), "path_index,tau,x_tau,x_star,n_jumps");
}

/// Criterion 11: identical argv + config + seed produce byte-identical
/// CSVs across different worker counts.
#[test]
fn c11_determinism_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "mm1.json", r#"{"kind": "mm1", "lambda": 1.0, "mu": 1.0}"#);

    let run = |threads: &str, tag: &str| -> (Vec<u8>, Vec<u8>, Vec<u8>) {
        let sim_out = dir.path().join(format!("sim_{tag}.csv"));
        let status = bin()
            .args([
                "--threads", threads, "simulate", "--config", &cfg, "--rule", "min:10,30",
                "--paths", "2000", "--seed", "42", "--out", sim_out.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success());

        let lab_out = dir.path().join(format!("lab_{tag}.csv"));
        let lab_sum = dir.path().join(format!("lab_{tag}.json"));
        let status = bin()
            .args([
                "--threads", threads, "lab", "martingale", "--config", &cfg,
                "--t-grid", "1,5", "--l-grid", "2,4", "--paths", "4000", "--seed", "11",
                "--out", lab_out.to_str().unwrap(), "--summary", lab_sum.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success());

        (
            std::fs::read(&sim_out).unwrap(),
            std::fs::read(&lab_out).unwrap(),
            std::fs::read(&lab_sum).unwrap(),
        )
    };

    let a = run("1", "t1");
    let b = run("4", "t4");
    let c = run("2", "t2");
    assert_eq!(a.0, b.0, "simulate CSV differs between 1 and 4 threads");
    assert_eq!(a.1, b.1, "martingale CSV differs between 1 and 4 threads");
    assert_eq!(a.2, b.2, "martingale summary differs between 1 and 4 threads");
    assert_eq!(a.0, c.0);
    assert_eq!(a.1, c.1);
    println!("PASS criterion 11: byte-identical CSVs across --threads 1/2/4");
}

#[test]
fn couple_subcommand_runs_both_families() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("couple.csv");
    let status = bin()
        .args([
            "couple", "--family", "bd", "--lambda-seq", "1", "--mu-seq", "2", "--m", "3",
            "--t", "2", "--paths", "200", "--seed", "5", "--out", out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 201);

    let status = bin()
        .args([
            "couple", "--family", "catastrophe", "--lambda-seq", "1", "--mu", "1", "--m", "4",
            "--t", "2", "--paths", "200", "--seed", "5",
        ])
        .stdout(std::process::Stdio::null())
        .status()
        .unwrap();
    assert!(status.success());
}

#[test]
fn env_var_caps_override_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "mm1.json", r#"{"kind": "mm1", "lambda": 1.0, "mu": 1.0}"#);
    let out = bin()
        .env("SKIPFREE_EVENT_CAP", "10")
        .args(["simulate", "--config", &cfg, "--rule", "fixed:1000", "--paths", "1", "--seed", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("event cap"));

    let out = bin()
        .env("SKIPFREE_STATE_CAP", "not-a-number")
        .args(["simulate", "--config", &cfg, "--rule", "fixed:1", "--paths", "1", "--seed", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn check_peskir_reports_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sub.json", r#"{"kind": "mm1", "lambda": 1.0, "mu": 0.5}"#);
    let out = bin()
        .args(["check", "peskir", "--config", &cfg, "--p", "1.5", "--k-max", "2000"])
        .output()
        .unwrap();
    assert!(out.status.success(), "reporting subcommand must exit 0");
    assert!(String::from_utf8_lossy(&out.stdout).contains("trend=growing"));
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn polfreq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polfreq")).args(args).output().unwrap()
}

fn ok(args: &[&str]) {
    let out = polfreq(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn sweep_writes_expected_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    ok(&["sweep", "--preset", "ideal", "--seed", "1", "--out", out]);
    let csv = read(dir.path(), "sweep.csv");
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("rf_frequency_GHz,direction,bin0_power,bin1_power"));
    assert_eq!(lines.count(), 22);
    let manifest: serde_json::Value = serde_json::from_str(&read(dir.path(), "manifest.json")).unwrap();
    assert_eq!(manifest["command"], "sweep");
    assert_eq!(manifest["outputs"][0]["file"], "sweep.csv");
    assert_eq!(manifest["outputs"][0]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn empty_range_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = polfreq(&[
        "sweep",
        "--seed",
        "1",
        "--rf-start",
        "27",
        "--rf-stop",
        "17",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("usage error"));
}

#[test]
fn seed_is_mandatory() {
    let dir = tempfile::tempdir().unwrap();
    let out = polfreq(&["truth-table", "--out", dir.path().to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));
}

#[test]
fn analytic_truth_table() {
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "truth-table",
        "--preset",
        "ideal",
        "--analytic",
        "--seed",
        "0",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let csv = read(dir.path(), "truth_table.csv");
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "input,p00,p01,p10,p11");
    let row: Vec<f64> = rows[3].split(',').skip(1).map(|x| x.parse().unwrap()).collect();
    assert!(rows[3].starts_with("10,"));
    assert!(row[..3].iter().all(|&p| p < 1e-15) && (row[3] - 1.0).abs() < 1e-15);
    let report: serde_json::Value = serde_json::from_str(&read(dir.path(), "truth_table.json")).unwrap();
    assert_eq!(report["average_correct"], 1.0);
    assert_eq!(report["mode"], "analytic");
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.json");
    fs::write(
        &config,
        r#"{"device": "paper", "seed": 7, "flux": 1e6, "duration": 10}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    ok(&[
        "truth-table",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    let report: serde_json::Value = serde_json::from_str(&read(&out, "truth_table.json")).unwrap();
    let avg = report["average_correct"].as_f64().unwrap();
    assert!((0.98..=0.995).contains(&avg));

    ok(&[
        "truth-table",
        "--config",
        config.to_str().unwrap(),
        "--preset",
        "ideal",
        "--out",
        out.to_str().unwrap(),
    ]);
    let report: serde_json::Value = serde_json::from_str(&read(&out, "truth_table.json")).unwrap();
    assert_eq!(report["average_correct"], 1.0);
}

#[test]
fn bell_then_tomo_reproduces_report() {
    let dir = tempfile::tempdir().unwrap();
    let bell = dir.path().join("bell");
    let tomo = dir.path().join("tomo");
    ok(&[
        "bell",
        "--preset",
        "paper",
        "--seed",
        "3",
        "--input",
        "A:w1",
        "--out",
        bell.to_str().unwrap(),
    ]);
    let counts = bell.join("counts.csv");
    ok(&[
        "tomo",
        "--seed",
        "3",
        "--counts",
        counts.to_str().unwrap(),
        "--target",
        "psi+",
        "--out",
        tomo.to_str().unwrap(),
    ]);
    assert_eq!(read(&bell, "report.json"), read(&tomo, "report.json"));
    let report: serde_json::Value = serde_json::from_str(&read(&bell, "report.json")).unwrap();
    assert_eq!(report["n_samples"], 1024);
    assert!(report["fidelity"]["mean"].as_f64().unwrap() >= 0.98);
    assert!(report["diagnostics"]["acceptance_rate"].as_f64().is_some());
}

#[test]
fn analytic_bell_has_null_acceptance() {
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "bell",
        "--analytic",
        "--seed",
        "0",
        "--input",
        "D:w0",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let report: serde_json::Value = serde_json::from_str(&read(dir.path(), "report.json")).unwrap();
    assert!(report["diagnostics"]["acceptance_rate"].is_null());
    assert!((report["fidelity"]["mean"].as_f64().unwrap() - 1.0).abs() < 1e-10);
    assert!(!dir.path().join("counts.csv").exists());
}

#[test]
fn bell_rejects_unknown_input() {
    let dir = tempfile::tempdir().unwrap();
    let out = polfreq(&[
        "bell",
        "--seed",
        "0",
        "--input",
        "H:w0",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(!out.status.success());
}

#[test]
fn truncated_csv_names_line() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("counts.csv");
    fs::write(
        &csv,
        "pol_setting,freq_setting,duration_s,counts\nH,w0,10,5\nH,w1,10,7\nH,w0+w1\n",
    )
    .unwrap();
    let out = polfreq(&[
        "tomo",
        "--seed",
        "0",
        "--counts",
        csv.to_str().unwrap(),
        "--target",
        "phi+",
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 4"), "{err}");
}

use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
seed = 11
[split]
n_learn = 300
n_test = 100
[bandwidth]
k_grid = [5, 10, 20]
[sim]
n_days = 400
"#;

fn fmode(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fmode"))
        .current_dir(dir)
        .env("FMODE_THREADS", "1")
        .args(args)
        .output()
        .unwrap()
}

fn ok(out: Output) -> Output {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn run_pipeline(dir: &Path) -> (Vec<u8>, Vec<u8>, Vec<u8>) {
    std::fs::write(dir.join("run.toml"), SMALL).unwrap();
    ok(fmode(dir, &["simulate", "--config", "run.toml", "--out", "series.csv"]));
    ok(fmode(dir, &["forecast", "series.csv", "--config", "run.toml", "--out", "records.csv"]));
    ok(fmode(dir, &["evaluate", "records.csv", "--out", "report.csv", "--scatter", "scatter.csv"]));
    let read = |f: &str| std::fs::read(dir.join(f)).unwrap();
    (read("series.csv"), read("records.csv"), read("report.csv"))
}

#[test]
fn simulate_forecast_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let (_, records, report) = run_pipeline(dir.path());
    let report = String::from_utf8(report).unwrap();
    let lines: Vec<&str> = report.lines().collect();
    assert_eq!(lines.len(), 13);
    assert!(lines[0].starts_with("month,mode_mape,mode_q25,mode_q50,mode_q75,median_mape"));
    assert!(lines.iter().all(|l| l.split(',').count() == 1 + 3 * 4));
    assert!(lines[1].starts_with("Jan,"));
    assert!(lines[12].starts_with("Dec,"));

    // every predictor covers the same test days
    let records = String::from_utf8(records).unwrap();
    let mut days: std::collections::BTreeMap<String, Vec<String>> = Default::default();
    for line in records.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        days.entry(f[5].to_string()).or_default().push(f[0].to_string());
    }
    assert_eq!(days.len(), 3);
    let first = days.values().next().unwrap().clone();
    assert_eq!(first.len(), 100);
    assert!(days.values().all(|d| *d == first));
}

#[test]
fn rerun_is_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(run_pipeline(a.path()), run_pipeline(b.path()));
}

#[test]
fn seed_flag_changes_the_series() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), SMALL).unwrap();
    let a = ok(fmode(dir.path(), &["simulate", "--config", "run.toml"])).stdout;
    let b = ok(fmode(dir.path(), &["simulate", "--config", "run.toml", "--seed", "12"])).stdout;
    assert_ne!(a, b);
}

#[test]
fn slice_writes_curves() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("s.csv"), "timestamp,value\n2002-01-01T00:00,1\n2002-01-01T12:00,2\n2002-01-02T00:00,3\n2002-01-02T12:00,4\n").unwrap();
    let out = ok(fmode(dir.path(), &["slice", "s.csv", "--period", "2"])).stdout;
    assert_eq!(String::from_utf8(out).unwrap(), "day_index,t,value\n1,0,1\n1,1,2\n2,0,3\n2,1,4\n");
    let bad = fmode(dir.path(), &["slice", "s.csv", "--period", "3"]);
    assert!(!bad.status.success());
    let err = String::from_utf8(bad.stderr).unwrap();
    assert!(err.starts_with("error[series]:"), "{err}");
    assert_eq!(err.trim_end().lines().count(), 1);
}

#[test]
fn invalid_config_lists_every_key() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "predictors = []\n[bandwidth]\nmode = \"knn\"\n[sim]\nar_coeff = 2.0\n").unwrap();
    let out = fmode(dir.path(), &["simulate", "--config", "bad.toml", "--out", "never.csv"]);
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.starts_with("error[config]:"));
    for key in ["predictors", "bandwidth.k", "sim"] {
        assert!(err.contains(&format!("{key}:")), "{err}");
    }
    assert!(!dir.path().join("never.csv").exists());
}

#[test]
fn bad_flag_values_fail() {
    let dir = tempfile::tempdir().unwrap();
    assert!(!fmode(dir.path(), &["simulate", "--predictor", "mid"]).status.success());
    let out = fmode(dir.path(), &["converge", "--phi", "crossing"]);
    assert!(String::from_utf8(out.stderr).unwrap().starts_with("error[config]:"));
}

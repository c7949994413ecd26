use std::path::Path;
use std::process::{Command, Output};

fn fvlab(out: &Path, args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fvlab"));
    cmd.arg("--out").arg(out).args(args);
    if let Some(t) = threads {
        cmd.env("FV_LAB_THREADS", t);
    }
    cmd.output().unwrap()
}

#[test]
fn rates_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = fvlab(dir.path(), &["rates", "--p", "0.2", "--steps", "5"], None);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("rates.csv")).unwrap();
    assert_eq!(csv.lines().count(), 6);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("rates.json")).unwrap()).unwrap();
    assert_eq!(json["manifest"]["subcommand"], "rates");
    assert_eq!(json["passed"], true);
}

#[test]
fn stochastic_commands_need_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out = fvlab(dir.path(), &["bad-set", "--n-walks", "10"], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--seed"));
}

#[test]
fn thread_count_does_not_change_results() {
    let args = ["foster-check", "--n-walks", "6", "--replicas", "40", "--seed", "3"];
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(fvlab(a.path(), &args, Some("1")).status.code(), Some(0));
    assert_eq!(fvlab(b.path(), &args, Some("3")).status.code(), Some(0));
    let da = fvlab::cli::csv_digests(a.path()).unwrap();
    assert_eq!(da, fvlab::cli::csv_digests(b.path()).unwrap());
    assert_eq!(da.len(), 1);
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "p = 0.25\nn_walks = 6\nseed = 9\n").unwrap();
    let out = fvlab(
        &dir.path().join("out"),
        &["--config", cfg.to_str().unwrap(), "simulate", "--horizon", "5", "--replicas", "2"],
        None,
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/simulate.json")).unwrap()).unwrap();
    assert_eq!(json["manifest"]["seed"], 9);
}

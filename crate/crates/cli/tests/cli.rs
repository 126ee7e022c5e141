//! Drives the `rumor` binary end to end.

use std::path::Path;
use std::process::{Command, Output};

fn rumor(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rumor"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn missing_config_exits_with_one() {
    let out = rumor(&["evaluate"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--config"));
}

#[test]
fn bad_flag_exits_with_one() {
    assert_eq!(rumor(&["run", "--bogus"]).status.code(), Some(1));
    assert_eq!(rumor(&["run", "--model", "knn"]).status.code(), Some(1));
}

#[test]
fn unreadable_config_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("nope.toml");
    assert_eq!(
        rumor(&["ingest", "--config", path(&cfg)]).status.code(),
        Some(1)
    );
}

#[test]
fn help_exits_cleanly() {
    let out = rumor(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("synth"));
}

#[test]
fn synth_run_validate() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    let out = rumor(&["synth", "--preset", "mini", "--out", path(&corpus)]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let cfg = corpus.join("pipeline.toml");
    assert!(cfg.is_file());

    let out = rumor(&["validate", "--config", path(&cfg)]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let run = dir.path().join("run");
    let out = rumor(&[
        "evaluate",
        "--config",
        path(&cfg),
        "--out",
        path(&run),
        "--hours",
        "1,12",
        "--model",
        "rf",
        "--feature-groups",
        "All,CreditScore",
    ]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(stdout.contains("rf\tAll\t12\t"), "{stdout}");
    assert!(run.join("report.csv").is_file());

    let out = rumor(&["validate", "--out", path(&run)]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    std::fs::write(run.join("report.csv"), "x\n").unwrap();
    assert_eq!(
        rumor(&["validate", "--out", path(&run)]).status.code(),
        Some(1)
    );
}

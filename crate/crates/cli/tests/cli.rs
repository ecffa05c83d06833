use std::process::{Command, Output};

fn sparselab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sparselab"))
        .args(args)
        .env_remove("SPARSELAB_THREADS")
        .output()
        .unwrap()
}

const CHEAP: &[&str] = &["sharpness", "--kind", "ball-annulus", "--n", "256", "--deltas", "2^-3..2^-5"];

#[test]
fn missing_kind_is_a_usage_error() {
    assert_eq!(sparselab(&["sharpness"]).status.code(), Some(2));
}

#[test]
fn unknown_kind_is_a_usage_error() {
    let out = sparselab(&["sharpness", "--kind", "cube"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn cheap_sharpness_passes_and_writes_csv() {
    let out = sparselab(CHEAP);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = String::from_utf8(out.stdout).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("# sparselab-csv v1"));
    assert_eq!(lines.next(), Some("experiment,kind,d,p,q,r,scale,lower_value,upper_value"));
    assert_eq!(lines.count(), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("PASS"));
}

#[test]
fn output_is_deterministic() {
    assert_eq!(sparselab(CHEAP).stdout, sparselab(CHEAP).stdout);
}

#[test]
fn too_coarse_grid_is_rejected() {
    let out = sparselab(&["sharpness", "--kind", "ball-annulus", "--n", "256", "--deltas", "2^-3..2^-7"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("512"));
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    let csv = dir.path().join("out.csv");
    std::fs::write(&cfg, "experiment = sharpness\nkind = ball-annulus\nn = 256\ndeltas = 2^-3..2^-5\n").unwrap();
    let out = sparselab(&["--config", cfg.to_str().unwrap(), "--out", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS"));
    assert_eq!(std::fs::read(&csv).unwrap(), sparselab(CHEAP).stdout);

    // flags on the command line override the file
    let out = sparselab(&["sharpness", "--config", cfg.to_str().unwrap(), "--deltas", "2^-3..2^-7"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_for_another_experiment_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "experiment = continuity\n").unwrap();
    let out = sparselab(&["sharpness", "--kind", "ball-annulus", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn tolerance_failure_exits_with_one() {
    // a wide annulus steepens the lower slope past tolerance
    let out = sparselab(&["sharpness", "--kind", "ball-annulus", "--n", "256", "--deltas", "2^-3..2^-5", "--c", "8"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("FAIL"));
}

#[test]
fn average_round_trips_a_grid() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("a.csv");
    let out = sparselab(&["average", "--n", "16", "--out", grid.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let again = dir.path().join("b.csv");
    let out = sparselab(&["average", "--f", grid.to_str().unwrap(), "--out", again.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kahler-lab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn reports(dir: &Path) -> Vec<serde_json::Value> {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn verify_passes_and_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let o = lab(&[
            "verify", "--suite", "kahler", "--grid", "torus2d:16", "--count", "2", "--seed", "3",
            "--out", dir.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let ja = fs::read(a.join("summary.json")).unwrap();
    assert_eq!(ja, fs::read(b.join("summary.json")).unwrap());
    assert_eq!(fs::read(a.join("checks.csv")).unwrap(), fs::read(b.join("checks.csv")).unwrap());
    assert!(fs::read_to_string(a.join("summary.txt")).unwrap().lines().any(|l| l.starts_with("result") && l.trim_end().ends_with("PASS")));
    assert!(reports(&a).iter().all(|r| r["pass"] == true));
}

#[test]
fn hundred_random_distance_pairs_pass() {
    let tmp = tempfile::tempdir().unwrap();
    let o = lab(&["distance", "--pair", "random", "--seed", "7", "--count", "100", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let table = fs::read_to_string(tmp.path().join("distances.csv")).unwrap();
    assert_eq!(table.lines().count(), 101);
    assert_eq!(reports(tmp.path()).len(), 400);
}

#[test]
fn geodesic_writes_time_series() {
    let tmp = tempfile::tempdir().unwrap();
    let o = lab(&["geodesic", "--grid", "sphere:64", "--seed", "2", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(tmp.path().join("geodesic.csv")).unwrap();
    assert!(csv.starts_with("t,mass,speed,residual,F_node0"));
    assert_eq!(csv.lines().count(), 102);
    assert!(tmp.path().join("start.json").exists());
}

#[test]
fn short_flow_is_inconclusive() {
    let tmp = tempfile::tempdir().unwrap();
    let o = lab(&[
        "flow", "--grid", "sphere:64", "--initial", "mode:2", "--t-end", "0.5", "--out", tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stderr));
    let traj = fs::read_to_string(tmp.path().join("trajectory.csv")).unwrap();
    assert!(traj.starts_with("t,curvature_l2,phi_dot_sup,phi_c0,dc_length"));
    let summary = fs::read_to_string(tmp.path().join("summary.txt")).unwrap();
    assert!(summary.contains("inconclusive"));
}

#[test]
fn config_file_with_flag_override() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.cfg");
    fs::write(&cfg, "command = distance\ngrid = torus2d:32\ncount = 50\n").unwrap();
    let out = tmp.path().join("out");
    let o = lab(&["--config", cfg.to_str().unwrap(), "--count", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(reports(&out).len(), 12);
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.cfg");
    fs::write(&cfg, "command = verify\nresolution = 64\n").unwrap();
    let o = lab(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.cfg:2") && err.contains("resolution = 64"), "{err}");
}

#[test]
fn out_of_range_resolution_is_rejected() {
    let o = lab(&["verify", "--grid", "torus4d:32"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("8..=16"));
}

#[test]
fn unwritable_output_directory_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let file = tmp.path().join("plain");
    fs::write(&file, "").unwrap();
    let o = lab(&["distance", "--count", "1", "--out", file.join("sub").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn missing_command_is_a_usage_error() {
    assert_eq!(code(&lab(&[])), 2);
    assert_eq!(code(&lab(&["explode"])), 2);
}

//! End-to-end checks of the binary: exit codes, byte-identical reruns and
//! report layout.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_crtfrag")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

fn tmpdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("crtfrag-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

const BROWNIAN_SMALL: &str = r#"{
  "mechanism": {"alpha": 0.0, "beta": 0.5},
  "dt": 0.002,
  "horizon": 20.0,
  "n": 500,
  "seed": 7
}"#;

#[test]
fn mechanism_check_passes_quickly() {
    let dir = tmpdir("mech");
    let cfg = write_config(&dir, "cfg.json", BROWNIAN_SMALL);
    let out_dir = dir.join("out");
    let start = std::time::Instant::now();
    let out = run(&[
        "mechanism-check",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(start.elapsed().as_secs() < 10, "mechanism-check too slow");
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("mechanism-check_identities.csv").exists());
    assert!(out_dir.join("mechanism-check_summary.json").exists());
    let summary = std::fs::read_to_string(out_dir.join("mechanism-check_summary.json")).unwrap();
    assert!(summary.contains("\"pass\": true"));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tmpdir("determinism");
    let cfg = write_config(&dir, "cfg.json", BROWNIAN_SMALL);
    let (a, b) = (dir.join("a"), dir.join("b"));
    for out_dir in [&a, &b] {
        let out = run(&[
            "fragmentation",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
            "--threads",
            if out_dir == &a { "1" } else { "4" },
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for name in [
        "fragmentation_structure.csv",
        "fragmentation_summary.json",
        "fragmentation_trajectories.csv",
    ] {
        let fa = std::fs::read(a.join(name)).unwrap();
        let fb = std::fs::read(b.join(name)).unwrap();
        assert_eq!(fa, fb, "{name} differs between reruns/thread counts");
    }
}

#[test]
fn incompatible_suite_exits_2() {
    let dir = tmpdir("incompat");
    let cfg = write_config(
        &dir,
        "stable.json",
        r#"{"mechanism": {"alpha": 0.0, "beta": 0.0,
            "levy": {"kind": "stable", "c": 0.75, "a": 1.5}}, "n": 100}"#,
    );
    let out = run(&["dislocation-ske", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("beta"), "{msg}");
}

#[test]
fn bad_config_exits_2_and_names_field() {
    let dir = tmpdir("badcfg");
    let cfg = write_config(
        &dir,
        "bad.json",
        r#"{"mechanism": {"alpha": 0.0, "beta": -1.0}}"#,
    );
    let out = run(&["mechanism-check", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("beta"));

    let cfg2 = write_config(
        &dir,
        "unknown.json",
        r#"{"mechanism": {"alpha": 0.0, "beta": 0.5}, "bogus": 1}"#,
    );
    let out2 = run(&["mechanism-check", "--config", cfg2.to_str().unwrap()]);
    assert_eq!(out2.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out2.stderr).contains("bogus"));
}

#[test]
fn unknown_suite_exits_2() {
    let dir = tmpdir("nosuite");
    let cfg = write_config(&dir, "cfg.json", BROWNIAN_SMALL);
    let out = run(&["no-such-suite", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_3() {
    let dir = tmpdir("io");
    let cfg = write_config(&dir, "cfg.json", BROWNIAN_SMALL);
    let blocker = dir.join("blocked");
    std::fs::write(&blocker, "a plain file, not a directory").unwrap();
    let out = run(&[
        "mechanism-check",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        blocker.join("nested").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn ske_suite_small_run_passes() {
    let dir = tmpdir("ske");
    let cfg = write_config(
        &dir,
        "b.json",
        r#"{
          "mechanism": {"alpha": 0.0, "beta": 0.5},
          "dt": 0.001,
          "lambdas": [2.0],
          "n": 2000,
          "seed": 3
        }"#,
    );
    let out_dir = dir.join("out");
    let out = run(&[
        "dislocation-ske",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(out_dir.join("dislocation-ske_oracle_chain.csv").exists());
    assert!(out_dir.join("dislocation-ske_sweep.csv").exists());
}

#[test]
fn special_markov_reports_the_failing_raw_skeleton_count() {
    // the raw skeleton count claim cannot hold (its intensity has infinite
    // total mass), so the suite honestly exits 1 while the node and
    // thresholded rows pass
    let dir = tmpdir("markov");
    let cfg = write_config(
        &dir,
        "b.json",
        r#"{
          "mechanism": {"alpha": 0.0, "beta": 0.5},
          "dt": 0.001,
          "theta_max": 1.0,
          "n": 3000,
          "seed": 5
        }"#,
    );
    let out_dir = dir.join("out");
    let out = run(&[
        "special-markov",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stdout));
    let summary = std::fs::read_to_string(out_dir.join("special-markov_summary.json")).unwrap();
    assert!(summary.contains("\"pass\": false"));
    // the thresholded variant holds
    let csv = std::fs::read_to_string(out_dir.join("special-markov_counts.csv")).unwrap();
    let thresholded = csv
        .lines()
        .find(|l| l.contains("above length"))
        .expect("thresholded row present");
    assert!(thresholded.contains("true"), "{thresholded}");
}

#[test]
fn node_suite_reports_z_scores() {
    let dir = tmpdir("nod");
    let cfg = write_config(
        &dir,
        "atoms.json",
        r#"{
          "mechanism": {"alpha": 0.0, "beta": 0.5,
                        "levy": {"kind": "atoms", "atoms": [[1.0, 1.0]]}},
          "dt": 0.002,
          "lambdas": [1.0, 2.0],
          "n": 4000,
          "seed": 11
        }"#,
    );
    let out_dir = dir.join("out");
    let out = run(&[
        "dislocation-nod",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(out_dir.join("dislocation-nod_node_moment.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "lambda,estimate,stderr,oracle,z,pass,note");
    assert_eq!(lines.count(), 2);
}

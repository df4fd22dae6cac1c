//! End-to-end tests of the `hierlyap` binary: exit codes, emitted files,
//! determinism, and the round trip between the example generator and the
//! parser. Every test spawns the real executable.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_hierlyap");

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn run_with_env(args: &[&str], env: &[(&str, &str)]) -> Run {
    let mut cmd = Command::new(BIN);
    // The seed override must come only from the test itself, never from the
    // caller's shell.
    cmd.env_remove("HIERLYAP_SEED");
    for (key, value) in env {
        cmd.env(key, value);
    }
    let Output {
        status,
        stdout,
        stderr,
    } = cmd.args(args).output().expect("binary runs");
    Run {
        code: status.code().expect("no signal"),
        stdout: String::from_utf8(stdout).expect("utf8 stdout"),
        stderr: String::from_utf8(stderr).expect("utf8 stderr"),
    }
}

fn run(args: &[&str]) -> Run {
    run_with_env(args, &[])
}

fn write(dir: &TempDir, name: &str, content: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, content).expect("fixture written");
    path
}

fn path_str(path: &Path) -> &str {
    path.to_str().expect("utf8 path")
}

/// Generates the built-in example into `dir` and returns the config path.
fn emit_example(dir: &TempDir) -> PathBuf {
    let out = run(&["reproduce-example", "--out-dir", path_str(dir.path())]);
    assert_eq!(out.code, 0, "stderr: {}", out.stderr);
    dir.path().join("config.json")
}

const STABLE_SCALAR: &str = r#"{
  "version": 1,
  "subsystems": [
    {"A": [[-1.0]], "B": [1.0], "C": [1.0], "f": [], "x_star": [0.0], "d": 2.0, "P": [[0.5]]}
  ],
  "couplings": [],
  "initial_state": [0.5]
}"#;

#[test]
fn reproduce_example_is_deterministic() {
    let dir_a = TempDir::new().unwrap();
    let dir_b = TempDir::new().unwrap();
    emit_example(&dir_a);
    emit_example(&dir_b);
    for name in ["config.json", "report.json", "trajectory.csv"] {
        let a = fs::read(dir_a.path().join(name)).expect("first run wrote the file");
        let b = fs::read(dir_b.path().join(name)).expect("second run wrote the file");
        assert_eq!(a, b, "{name} differs between identical runs");
    }
}

// The emitted config must describe the exact network the generator used:
// re-assessing the file from disk has to reproduce the report byte for byte.
#[test]
fn emitted_config_reassesses_to_the_same_report() {
    let dir = TempDir::new().unwrap();
    let config = emit_example(&dir);
    let report2 = dir.path().join("report2.json");
    let out = run(&[
        "assess",
        path_str(&config),
        "--robust",
        "--out",
        path_str(&report2),
    ]);
    assert_eq!(out.code, 0, "stderr: {}", out.stderr);
    let original = fs::read(dir.path().join("report.json")).unwrap();
    let reparsed = fs::read(&report2).unwrap();
    assert_eq!(original, reparsed);
}

#[test]
fn reproduce_example_report_is_certified_and_ordered() {
    let dir = TempDir::new().unwrap();
    emit_example(&dir);
    let report = fs::read_to_string(dir.path().join("report.json")).unwrap();
    assert!(report.contains("\"certified\": true"));
    let key_order = ["config_version", "kind", "seed", "certified", "reason"];
    let positions: Vec<usize> = key_order
        .iter()
        .map(|k| report.find(&format!("\"{k}\"")).expect("key present"))
        .collect();
    assert!(
        positions.windows(2).all(|w| w[0] < w[1]),
        "key order drifted"
    );
}

#[test]
fn drop_link_keeps_the_example_certified() {
    let dir = TempDir::new().unwrap();
    let out = run(&[
        "reproduce-example",
        "--out-dir",
        path_str(dir.path()),
        "--drop-link",
        "11",
    ]);
    assert_eq!(out.code, 0, "stderr: {}", out.stderr);
    let out = run(&[
        "reproduce-example",
        "--out-dir",
        path_str(dir.path()),
        "--drop-link",
        "40",
    ]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("out of range"));
}

#[test]
fn assess_certifies_the_example_and_rejects_far_states() {
    let dir = TempDir::new().unwrap();
    let config = emit_example(&dir);

    let out = run(&["assess", path_str(&config), "--robust"]);
    assert_eq!(out.code, 0);
    assert!(out.stdout.contains("certified (InDominantRegion)"));

    // First component pushed outside its validity ball: certification must
    // refuse and say why.
    let mut x0 = vec!["6.5".to_string()];
    x0.extend(std::iter::repeat_n("0".to_string(), 19));
    let report = dir.path().join("far.json");
    let out = run(&[
        "assess",
        path_str(&config),
        "--x0",
        &x0.join(","),
        "--out",
        path_str(&report),
    ]);
    assert_eq!(out.code, 1);
    let report = fs::read_to_string(&report).unwrap();
    assert!(report.contains("\"certified\": false"));
    assert!(report.contains("\"reason\": \"NotInBallSet\""));
}

#[test]
fn parse_failures_exit_two_with_location() {
    let dir = TempDir::new().unwrap();

    let bad_syntax = write(&dir, "syntax.json", "{ not json");
    let out = run(&["assess", path_str(&bad_syntax)]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("line 1"), "stderr: {}", out.stderr);

    let unknown = write(
        &dir,
        "unknown.json",
        r#"{"version": 1, "subsystems": [], "couplings": [], "extra": 3}"#,
    );
    let out = run(&["assess", path_str(&unknown)]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("extra"));
    assert!(out.stderr.contains("line 1"));

    let version = write(
        &dir,
        "version.json",
        r#"{"version": 9, "subsystems": [], "couplings": []}"#,
    );
    let out = run(&["assess", path_str(&version)]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("version 9"));

    let out = run(&["assess", path_str(&dir.path().join("absent.json"))]);
    assert_eq!(out.code, 2);

    // Usage errors from the argument parser share the exit code.
    let out = run(&["assess"]);
    assert_eq!(out.code, 2);
}

#[test]
fn missing_initial_state_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let config = write(
        &dir,
        "no_x0.json",
        r#"{
  "version": 1,
  "subsystems": [
    {"A": [[-1.0]], "B": [1.0], "C": [1.0], "f": [], "x_star": [0.0], "d": 2.0, "P": [[0.5]]}
  ],
  "couplings": []
}"#,
    );
    let out = run(&["assess", path_str(&config)]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("--x0"));
}

#[test]
fn x0_accepts_inline_numbers_and_array_files() {
    let dir = TempDir::new().unwrap();
    let config = write(&dir, "scalar.json", STABLE_SCALAR);

    let out = run(&["assess", path_str(&config), "--x0", "0.25"]);
    assert_eq!(out.code, 0, "stderr: {}", out.stderr);

    let x0_file = write(&dir, "x0.json", "[0.25]");
    let out = run(&["assess", path_str(&config), "--x0", path_str(&x0_file)]);
    assert_eq!(out.code, 0, "stderr: {}", out.stderr);

    let out = run(&["assess", path_str(&config), "--x0", "nonsense"]);
    assert_eq!(out.code, 2);
}

#[test]
fn assumption_violations_exit_three_naming_the_subsystem() {
    let dir = TempDir::new().unwrap();
    let config = write(
        &dir,
        "unstable.json",
        r#"{
  "version": 1,
  "subsystems": [
    {"A": [[-1.0]], "B": [1.0], "C": [1.0], "f": [], "x_star": [0.0], "d": 2.0, "P": [[0.5]]},
    {"A": [[2.0]], "B": [1.0], "C": [1.0], "f": [], "x_star": [0.0], "d": 2.0}
  ],
  "couplings": [],
  "initial_state": [0.1, 0.1]
}"#,
    );
    let out = run(&["assess", path_str(&config)]);
    assert_eq!(out.code, 3);
    assert!(out.stderr.contains("subsystem 1"), "stderr: {}", out.stderr);
}

#[test]
fn divergence_exits_four_with_the_last_finite_time() {
    let dir = TempDir::new().unwrap();
    let config = write(
        &dir,
        "blowup.json",
        r#"{
  "version": 1,
  "subsystems": [
    {"A": [[-1.0]], "B": [1.0], "C": [1.0], "f": [{"coeff": 1.0, "exponents": [3]}], "x_star": [0.0], "d": 1.0, "P": [[0.5]]}
  ],
  "couplings": [],
  "initial_state": [40.0]
}"#,
    );
    let out = run(&["simulate", path_str(&config), "--t-end", "1.0"]);
    assert_eq!(out.code, 4);
    assert!(out.stderr.contains("t ="), "stderr: {}", out.stderr);
}

#[test]
fn zero_horizon_simulation_emits_exactly_two_rows() {
    let dir = TempDir::new().unwrap();
    let config = write(&dir, "scalar.json", STABLE_SCALAR);
    let csv = dir.path().join("out.csv");
    let out = run(&[
        "simulate",
        path_str(&config),
        "--t-end",
        "0.001",
        "--dt",
        "0.001",
        "--csv",
        path_str(&csv),
    ]);
    assert_eq!(out.code, 0, "stderr: {}", out.stderr);
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.ends_with('\n'));
    assert!(!text.contains('\r'));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3, "header plus initial and stepped row");
    assert_eq!(lines[0], "t,x_1");
    assert_eq!(lines[1], "0,0.5");
    let stepped: Vec<f64> = lines[2].split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(stepped[0], 0.001);
    assert!(stepped[1] > 0.0 && stepped[1] < 0.5);
}

#[test]
fn certificate_column_is_present_and_nonincreasing() {
    let dir = TempDir::new().unwrap();
    let config = emit_example(&dir);
    let csv = dir.path().join("traj.csv");
    let out = run(&[
        "simulate",
        path_str(&config),
        "--t-end",
        "0.5",
        "--csv",
        path_str(&csv),
        "--with-certificate",
    ]);
    assert_eq!(out.code, 0, "stderr: {}", out.stderr);
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert_eq!(
        header,
        format!(
            "t,{},V",
            (1..=20)
                .map(|i| format!("x_{i}"))
                .collect::<Vec<_>>()
                .join(",")
        )
    );
    let storage: Vec<f64> = lines
        .map(|line| line.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(storage.len(), 501);
    let tol = 1e-6 * storage[0];
    assert!(
        storage.windows(2).all(|w| w[1] <= w[0] + tol),
        "storage column rose beyond tolerance"
    );
}

// Full double precision means the CSV parses back to the exact double that
// was written.
#[test]
fn csv_values_round_trip_through_text() {
    let dir = TempDir::new().unwrap();
    let config = write(&dir, "scalar.json", STABLE_SCALAR);
    let csv = dir.path().join("out.csv");
    let out = run(&[
        "simulate",
        path_str(&config),
        "--x0",
        "0.3333333333333333",
        "--t-end",
        "0.01",
        "--csv",
        path_str(&csv),
    ]);
    assert_eq!(out.code, 0);
    let text = fs::read_to_string(&csv).unwrap();
    let first_state: f64 = text
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(first_state, 0.3333333333333333f64);
}

#[test]
fn resilience_single_link_sweep_certifies_all_forty() {
    let dir = TempDir::new().unwrap();
    let config = emit_example(&dir);
    let out_json = dir.path().join("sweep.json");
    let out = run(&[
        "resilience",
        path_str(&config),
        "--single-links",
        "--robust",
        "--out",
        path_str(&out_json),
    ]);
    assert_eq!(out.code, 0, "stderr: {}", out.stderr);
    assert!(out.stdout.contains("40 of 40 subsets certified"));
    let rows: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&out_json).unwrap()).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 40);
    assert!(rows.iter().all(|r| r["certified"] == true));
}

#[test]
fn resilience_accepts_explicit_subsets_and_requires_a_mode() {
    let dir = TempDir::new().unwrap();
    let config = emit_example(&dir);
    let subsets = write(&dir, "subsets.json", "[[], [0, 1], [39]]");
    let out = run(&[
        "resilience",
        path_str(&config),
        "--subsets",
        path_str(&subsets),
    ]);
    assert_eq!(out.code, 0, "stderr: {}", out.stderr);
    assert!(out.stdout.contains("3 of 3 subsets certified"));
    assert!(out.stdout.contains("(none)"));

    let out = run(&["resilience", path_str(&config)]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("--single-links"));

    let out = run(&[
        "resilience",
        path_str(&config),
        "--single-links",
        "--subsets",
        path_str(&subsets),
    ]);
    assert_eq!(out.code, 2);
}

#[test]
fn seed_env_var_overrides_the_config_seed() {
    let dir = TempDir::new().unwrap();
    let config = write(
        &dir,
        "seeded.json",
        r#"{
  "version": 1,
  "seed": 7,
  "subsystems": [
    {"A": [[-1.0]], "B": [1.0], "C": [1.0], "f": [], "x_star": [0.0], "d": 2.0, "P": [[0.5]]}
  ],
  "couplings": [],
  "initial_state": [0.5]
}"#,
    );
    let report = dir.path().join("report.json");

    let out = run(&["assess", path_str(&config), "--out", path_str(&report)]);
    assert_eq!(out.code, 0);
    assert!(fs::read_to_string(&report).unwrap().contains("\"seed\": 7"));

    let out = run_with_env(
        &["assess", path_str(&config), "--out", path_str(&report)],
        &[("HIERLYAP_SEED", "99")],
    );
    assert_eq!(out.code, 0);
    assert!(fs::read_to_string(&report)
        .unwrap()
        .contains("\"seed\": 99"));

    let out = run_with_env(
        &["assess", path_str(&config)],
        &[("HIERLYAP_SEED", "not-a-number")],
    );
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("HIERLYAP_SEED"));
}

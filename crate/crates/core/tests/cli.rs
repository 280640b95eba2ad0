//! End-to-end runs of the command-line binary.

use std::path::Path;
use std::process::{Command, Output};

use filtered_feedback::phase::read_phase_csv;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_filtered-feedback")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.toml", "protocol = \"lowpass1\"\nlambda = 1\ngamma = 3.0\n");
    let from_file = run(&["--config", &cfg, "steady-state"]);
    assert!(from_file.status.success());
    assert!(stdout(&from_file).lines().nth(1).unwrap().starts_with("lowpass1,1,1,3,"));
    let overridden = run(&["--config", &cfg, "steady-state", "--gamma", "2"]);
    assert_eq!(stdout(&overridden).lines().nth(1).unwrap(), "lowpass1,1,1,2,,0.5,true,true");
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "protocol = \"lowpass1\"\ngama = 2.0\n");
    let o = run(&["--config", &cfg, "steady-state"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("line 2") && err.contains("gama"), "{err}");
}

#[test]
fn empty_config_changes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "empty.toml", "");
    let args = ["steady-state", "--protocol", "lowpass2", "--lambda", "1", "--gamma", "2", "--Omega", "2"];
    let plain = run(&args);
    let mut with_cfg = vec!["--config", cfg.as_str()];
    with_cfg.extend_from_slice(&args);
    assert_eq!(plain.stdout, run(&with_cfg).stdout);
    assert!(stdout(&plain).contains(",0.78125,true,true"));
}

#[test]
fn trajectory_output_is_reproducible() {
    let args = [
        "trajectory", "--protocol", "lowpass1", "--lambda", "1", "--gamma", "2", "--dt", "1e-3", "--steps", "200",
        "--ntraj", "8", "--seed", "42", "--fock", "10", "--stride", "50",
    ];
    let (a, b) = (run(&args), run(&args));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(stdout(&a).lines().count(), 1 + 5);
    let mut other = args.to_vec();
    other[14] = "43";
    assert_ne!(a.stdout, run(&other).stdout);
}

#[test]
fn phase_csv_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("phase.csv");
    let o = run(&["phase-diagram", "--grid", "6x5", "--output", path.to_str().unwrap()]);
    assert!(o.status.success());
    let rows = read_phase_csv(&path).unwrap();
    assert_eq!(rows.len(), 30);
    assert!(rows.iter().all(|r| r.gamma > 0.0 && r.big_omega > 0.0));
}

#[test]
fn bad_values_exit_with_usage_code() {
    assert_eq!(run(&["steady-state", "--protocol", "lowpass1", "--lambda", "1", "--gamma", "-1"]).status.code(), Some(2));
    assert_eq!(run(&["steady-state", "--protocol", "lowpass2", "--lambda", "1", "--gamma", "1"]).status.code(), Some(2));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

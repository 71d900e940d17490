use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn lattice(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lattice")).args(args).output().expect("binary runs")
}

fn lattice_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lattice")).args(args).env(key, value).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

fn csv_column(text: &str, name: &str) -> Vec<String> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(col).unwrap().to_string()).collect()
}

#[test]
fn simulate_volterra_writes_one_row_per_step() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("traj.csv");
    let o = lattice(&["simulate", "--system", "volterra_a", "--state", "1,1,1", "--t", "1", "--dt", "1e-3", "-o", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = read(&out);
    assert_eq!(text.lines().count(), 1002);
    assert_eq!(text.lines().next().unwrap(), "t,x_1,x_2,x_3");
    assert!(text.ends_with('\n') && !text.contains('\r'));

    let drift = read(&dir.path().join("traj.csv.drift.csv"));
    let row = drift.lines().find(|l| l.starts_with("I1,")).unwrap();
    let value: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
    assert!(value < 1e-9, "{value}");
}

#[test]
fn seeded_runs_are_byte_identical() {
    let args = ["simulate", "--system", "toda_tri", "--random", "--n", "4", "--seed", "7", "--t", "0.5"];
    let (a, b) = (lattice(&args), lattice(&args));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let other = lattice(&["simulate", "--system", "toda_tri", "--random", "--n", "4", "--seed", "8", "--t", "0.5"]);
    assert_ne!(a.stdout, other.stdout);
}

#[test]
fn solve_golden_two_site() {
    // lambda = (1, 2), r^2 = (0.4, 0.6) corresponds to a = sqrt(0.24), b = (1.4, 1.6).
    let state = format!("{},1.4,1.6", 0.24f64.sqrt());
    let o = lattice(&["solve", "--state", &state, "--t", "2", "--dt", "0.5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let deltas: Vec<f64> = csv_column(&text, "max_delta").iter().map(|s| s.parse().unwrap()).collect();
    assert_eq!(deltas.len(), 5);
    assert!(deltas[0] < 1e-9, "{}", deltas[0]);
    assert!(deltas.iter().all(|d| *d < 1e-7), "{deltas:?}");
}

#[test]
fn solve_random_reports_fallback_column() {
    let o = lattice(&["solve", "--random", "--n", "3", "--seed", "42", "--t", "1", "--dt", "0.25"]);
    assert!(o.status.success());
    let flags = csv_column(&stdout(&o), "fallback");
    assert_eq!(flags.len(), 5);
    assert!(flags.iter().all(|f| f == "0" || f == "1"));
}

#[test]
fn verify_brackets_passes_and_marks_negative_control() {
    let o = lattice(&["verify", "--suite", "brackets", "--n", "5", "--points", "100", "--seed", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["schema"], 1);
    assert_eq!(report["passed"], true);
    let checks = report["checks"].as_array().unwrap();
    for c in checks.iter().filter(|c| c["name"].as_str().unwrap().starts_with("jacobi.") && c["name"] != "jacobi.negative_control") {
        assert!(c["residual"].as_f64().unwrap() < 1e-6, "{c}");
    }
    let control = checks.iter().find(|c| c["name"] == "jacobi.negative_control").unwrap();
    assert_eq!(control["status"], "expected_fail");
    assert_eq!(report["traceability"].as_object().unwrap().len(), checks.len());
}

#[test]
fn verify_diagram_commutes() {
    let o = lattice(&["verify", "--suite", "diagram", "--points", "5"]);
    assert!(o.status.success());
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    for name in ["diagram.commutes_k1", "diagram.commutes_k2"] {
        let c = report["checks"].as_array().unwrap().iter().find(|c| c["name"] == name).unwrap();
        assert!(c["residual"].as_f64().unwrap() < 1e-7);
    }
}

#[test]
fn verify_output_ignores_thread_count() {
    let args = ["verify", "--suite", "reduction", "--points", "6", "--seed", "3"];
    let one = lattice_env(&args, "LATTICE_THREADS", "1");
    let four = lattice_env(&args, "LATTICE_THREADS", "4");
    let seq = lattice(&[&args[..], &["--sequential"]].concat());
    assert!(one.status.success());
    assert_eq!(one.stdout, four.stdout);
    assert_eq!(one.stdout, seq.stdout);
}

#[test]
fn config_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    let first = lattice(&[
        "simulate", "--system", "volterra_q", "--random", "--n", "4", "--seed", "11", "--t", "0.2", "--format", "json",
        "--save-config", cfg.to_str().unwrap(),
    ]);
    assert!(first.status.success());
    let replay = lattice(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert!(replay.status.success());
    assert_eq!(first.stdout, replay.stdout);
    let traj: Value = serde_json::from_slice(&replay.stdout).unwrap();
    assert_eq!(traj["system"], "volterra_q");
    assert_eq!(traj["times"].as_array().unwrap().len(), 201);

    let wrong = lattice(&["solve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(wrong.status.code(), Some(2));
}

#[test]
fn maps_from_the_command_line() {
    let o = lattice(&["map", "--map", "chop", "--state", "1,2,3,4,5", "--format", "json"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let got: Vec<f64> = v["output"]["coords"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    let want = [2f64.sqrt(), 12f64.sqrt(), 1.0, 5.0, 9.0];
    assert!(got.iter().zip(want).all(|(g, w)| (g - w).abs() < 1e-14), "{got:?}");
    assert_eq!(v["output"]["kind"], "toda_ab");
    assert_eq!(v["time_scale"], 0.5);

    let o = lattice(&["map", "--map", "flaschka", "--state", "0,0,0,0"]);
    assert_eq!(stdout(&o).lines().nth(1).unwrap().split(',').next().unwrap(), "toda_ab");
    let o = lattice(&["map", "--map", "henon", "--state", "1,1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn spectrum_reports_norming_constants() {
    let o = lattice(&["spectrum", "--system", "toda_tri", "--state", "1,0,0", "--format", "json"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let l: Vec<f64> = v["eigenvalues"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert!((l[0] + 1.0).abs() < 1e-14 && (l[1] - 1.0).abs() < 1e-14);
    let r2: f64 = v["r"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap().powi(2)).sum();
    assert!((r2 - 1.0).abs() < 1e-14);
}

#[test]
fn exit_codes() {
    let bad_state = lattice(&["simulate", "--system", "volterra_a", "--state", "1,-1,1"]);
    assert_eq!(bad_state.status.code(), Some(2));
    let unknown = lattice(&["simulate", "--system", "kdv", "--state", "1"]);
    assert_eq!(unknown.status.code(), Some(2));
    let bad_flag = lattice(&["simulate", "--frobnicate"]);
    assert_eq!(bad_flag.status.code(), Some(2));
    let threads = lattice_env(&["verify", "--suite", "moser"], "LATTICE_THREADS", "zero");
    assert_eq!(threads.status.code(), Some(2));
    let blow_up = lattice(&["simulate", "--system", "volterra_a", "--state", "1,1,1", "--t", "100", "--dt", "50"]);
    assert_eq!(blow_up.status.code(), Some(3));
}

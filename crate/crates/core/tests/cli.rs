use std::fs;
use std::process::{Command, Output};

fn distjet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_distjet")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn derive_prints_the_known_low_order_entries() {
    let o = distjet(&["derive", "--k", "3", "--s", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "1 * B[i1,i2; j1]");

    let o = distjet(&["derive", "--k", "4", "--s", "4"]);
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().all(|l| l.starts_with("-1 * B[")));

    let o = distjet(&["derive", "--k", "5", "--s", "1"]);
    assert_eq!(stdout(&o).trim(), "0");
}

#[test]
fn derive_json_is_parseable() {
    let o = distjet(&["derive", "--k", "4", "--s", "3", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v.is_object());
}

#[test]
fn config_is_echoed_before_output() {
    let o = distjet(&["derive", "--k", "3", "--s", "3"]);
    let err = String::from_utf8(o.stderr).unwrap();
    let first: serde_json::Value = serde_json::from_str(err.lines().next().unwrap()).unwrap();
    assert_eq!(first["command"], "derive");
    assert_eq!(first["args"]["k"], 3);
}

#[test]
fn usage_errors_exit_with_two() {
    for args in [
        vec!["derive", "--k", "9", "--s", "2"],
        vec!["derive", "--k", "4", "--s", "5"],
        vec!["derive", "--k", "3"],
        vec!["verify-identities", "--shape", "blob"],
        vec!["verify-identities", "--shape", "circle:R=1", "--k-max", "7"],
        vec!["mcf-compare", "--eps-list", "0.01,0.1"],
        vec!["frobnicate"],
    ] {
        assert_eq!(distjet(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn verify_identities_passes_on_the_ellipse() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = distjet(&["verify-identities", "--shape", "ellipse:a=2,b=1", "--k-max", "4", "--out", out]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["passed"], true);
    assert!(dir.path().join("config.json").exists());
    assert!(dir.path().join("report.json").exists());
}

#[test]
fn an_impossible_tolerance_fails_verification() {
    let o = distjet(&["verify-identities", "--shape", "ellipse:a=2,b=1", "--k-max", "3", "--tol", "1e-15"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn norm_scan_is_deterministic_for_a_seed() {
    let args = ["norm-scan", "--k", "4", "--n", "2", "--m", "1", "--samples", "100", "--seed", "7"];
    let (a, b) = (distjet(&args), distjet(&args));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(stdout(&a), stdout(&b));
    let c = distjet(&["norm-scan", "--k", "4", "--n", "2", "--m", "1", "--samples", "100", "--seed", "8"]);
    assert_ne!(stdout(&a), stdout(&c));
}

#[test]
fn flow_writes_config_snapshots_and_energy() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = distjet(&["flow", "--shape", "ellipse:a=2,b=1", "--nodes", "64", "--out", out]);
    assert_eq!(o.status.code(), Some(0));
    let summary: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(summary["stop"], "converged");
    assert_eq!(summary["energy_increases"], 0);

    let snaps = fs::read_to_string(dir.path().join("snapshots.csv")).unwrap();
    assert_eq!(snaps.lines().next(), Some("t,node,x,y"));
    let energy = fs::read_to_string(dir.path().join("energy.csv")).unwrap();
    let values: Vec<f64> = energy
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(values.windows(2).all(|w| w[1] <= w[0]));
    let config: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("config.json")).unwrap()).unwrap();
    assert_eq!(config["args"]["nodes"], 64);
}

#[test]
fn self_intersection_exits_with_three_and_keeps_the_last_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = distjet(&[
        "flow", "--stepper", "explicit", "--t-end", "0.05", "--eps", "0.001", "--nodes", "32",
        "--perturbation", "0.1", "--seed", "2", "--out", out,
    ]);
    assert_eq!(o.status.code(), Some(3));
    let summary: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(summary["stop"], "self_intersection");
    let snaps = fs::read_to_string(dir.path().join("snapshots.csv")).unwrap();
    assert!(snaps.lines().count() > 32);
}

#[test]
fn a_self_intersecting_start_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = distjet(&["flow", "--nodes", "32", "--perturbation", "0.25", "--seed", "2", "--out", out]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn mcf_compare_reports_a_monotone_sequence() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = distjet(&["mcf-compare", "--eps-list", "0.1,0.03,0.01", "--out", out]);
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("mcf.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    let dev: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(dev.windows(2).all(|w| w[1] < w[0]));
}

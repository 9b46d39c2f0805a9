use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use arrival_ic::bounds::{epsilon_swap, BoundInputs};
use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn run(args: &[&str], config: &str, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_arrival-ic"))
        .args(args)
        .arg("--config")
        .arg(fixture(config))
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Compares with the stored file; `ARRIVAL_IC_BLESS=1` rewrites it instead.
fn assert_golden(actual: &Path, name: &str) {
    let body = read(actual);
    if std::env::var_os("ARRIVAL_IC_BLESS").is_some() {
        std::fs::write(golden(name), &body).unwrap();
    }
    assert_eq!(body, read(&golden(name)), "{name} differs from the golden file");
}

fn csv_rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path).unwrap().records().map(Result::unwrap).collect()
}

#[test]
fn regret_csv_matches_golden_file_for_any_worker_count() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(run(&["regret", "--jobs", "1"], "regret_deterministic.json", a.path()).status.success());
    assert!(run(&["regret", "--jobs", "3"], "regret_deterministic.json", b.path()).status.success());
    for f in ["regret.csv", "regret_summary.csv", "regret_summary.json"] {
        assert_eq!(read(&a.path().join(f)), read(&b.path().join(f)), "{f}");
    }
    assert_golden(&a.path().join("regret.csv"), "regret.csv");
    assert_golden(&a.path().join("regret_summary.csv"), "regret_summary.csv");
}

#[test]
fn seed_flag_overrides_the_config() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(run(&["regret"], "regret_deterministic.json", a.path()).status.success());
    assert!(run(&["regret", "--seed", "43"], "regret_deterministic.json", b.path()).status.success());
    assert_ne!(read(&a.path().join("regret.csv")), read(&b.path().join("regret.csv")));
}

#[test]
fn regret_summary_agrees_with_rows_and_oracle_column() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(&["regret"], "regret_deterministic.json", dir.path()).status.success());
    let rows = csv_rows(&dir.path().join("regret.csv"));
    for r in &rows {
        let (fast, oracle): (f64, f64) = (r[3].parse().unwrap(), r[4].parse().unwrap());
        assert!((fast - oracle).abs() <= 1e-12);
    }
    let summary = csv_rows(&dir.path().join("regret_summary.csv"));
    for s in summary.iter().filter(|s| &s[1] == "swap") {
        let xs: Vec<f64> = rows.iter().filter(|r| r[1] == s[0]).map(|r| r[3].parse().unwrap()).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let (m, ci): (f64, f64) = (s[2].parse().unwrap(), s[3].parse().unwrap());
        assert!((mean - m).abs() <= 1e-12 && (mean - m).abs() <= ci.max(1e-12), "{}", &s[0]);
    }
}

#[test]
fn concentrated_belief_has_no_guarantee_and_unrecommended_arm_is_inconclusive() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["ic-check"], "ic_point_mass.json", dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&dir.path().join("ic_check.csv"));
    let status =
        |belief: &str, a: &str| rows.iter().find(|r| &r[0] == belief && &r[1] == a).map(|r| r[8].to_string()).unwrap();
    assert_eq!(status("point(150)", "1"), "no-guarantee");
    assert_eq!(status("point(150)", "2"), "inconclusive");
    assert_eq!(status("uniform(101,100)", "2"), "inconclusive");
    let json: Value = serde_json::from_str(&read(&dir.path().join("ic_check.json"))).unwrap();
    assert_eq!(json["beliefs"][0]["epsilon"], 1.0);
    assert_eq!(json["beliefs"][0]["guarantee"]["bound"]["flags"]["epsilon_capped"], true);
}

#[test]
fn bounds_point_equals_direct_call_and_sweep_is_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(run(&["bounds"], "bounds_point.json", a.path()).status.success());
    assert!(run(&["bounds"], "bounds_point.json", b.path()).status.success());
    let point: Value = serde_json::from_str(&read(&a.path().join("bounds_point.json"))).unwrap();
    let inputs: BoundInputs = serde_json::from_value(point["inputs"].clone()).unwrap();
    let direct = serde_json::to_value(epsilon_swap(&inputs).unwrap()).unwrap();
    assert_eq!(point["report"], direct);
    assert_eq!(read(&a.path().join("bounds_sweep.csv")), read(&b.path().join("bounds_sweep.csv")));
    assert_golden(&a.path().join("bounds_sweep.csv"), "bounds_sweep.csv");
    assert_eq!(csv_rows(&a.path().join("bounds_sweep.csv")).len(), 2 * 3 * 2);
}

#[test]
fn malformed_grid_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["bounds"], "bounds_bad_grid.json", dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("L_exponent"));
}

#[test]
fn unknown_keys_are_all_listed() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["regret"], "unknown_keys.json", dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("sed") && err.contains("replications.inner_runs"), "{err}");
}

#[test]
fn adaptive_outputs_are_reproducible_and_report_slopes() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(run(&["adaptive"], "adaptive_small.json", a.path()).status.success());
    assert!(run(&["adaptive", "--jobs", "2"], "adaptive_small.json", b.path()).status.success());
    for f in ["adaptive.csv", "adaptive_families.csv", "adaptive.json", "adaptive.svg"] {
        assert_eq!(read(&a.path().join(f)), read(&b.path().join(f)), "{f}");
    }
    assert_golden(&a.path().join("adaptive.csv"), "adaptive.csv");
    let json: Value = serde_json::from_str(&read(&a.path().join("adaptive.json"))).unwrap();
    assert!(json["policy"]["profile"]["slope"].is_number());
    assert!(json["baseline"]["max_family_slope"].is_number());
    let header = read(&a.path().join("adaptive.csv")).lines().next().unwrap().to_string();
    assert_eq!(header, "length,mean_max_regret,ci,baseline_mean_max_regret,baseline_ci");
}

#[test]
fn oracle_check_runs_without_config_and_checks_the_game_tree() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_arrival-ic"))
        .args(["oracle-check", "--seed", "9", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(csv_rows(&dir.path().join("oracle_swap.csv")).len(), 1000);

    let micro = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/oracle_micro.json");
    let out = Command::new(env!("CARGO_BIN_EXE_arrival-ic"))
        .arg("oracle-check")
        .arg("--config")
        .arg(micro)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let game = csv_rows(&dir.path().join("oracle_game.csv"));
    assert_eq!(game.len(), 3 * 2);
    assert!(game.iter().all(|r| &r[7] == "pass"));
}

#[test]
fn missing_config_is_a_config_error() {
    let out = Command::new(env!("CARGO_BIN_EXE_arrival-ic")).arg("regret").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

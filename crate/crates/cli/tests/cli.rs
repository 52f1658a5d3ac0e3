use std::path::PathBuf;
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_macicmac"))
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn gdof_curve_csv() {
    let o = run(&["gdof-curve", "--K", "2", "--alpha-max", "1", "--step", "1/2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "K,alpha,alpha_exact,dsym,dsym_exact,sum_dsym,sum_dsym_exact"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[2].starts_with("2,1,1,"));
    assert!(rows[2].contains(",1/3,"));
}

#[test]
fn timeshare_curve_csv() {
    let o = run(&["timeshare-curve", "--alpha-max", "2", "--step", "1"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with(
        "alpha,alpha_exact,d1,d1_exact,timeshare_sum,timeshare_sum_exact,superposition_sum,superposition_sum_exact,tight"
    ));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn writes_into_out_dir() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("artifacts");
    let o = bin()
        .args(["region", "--channel"])
        .arg(fixture("channel_2x1.json"))
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let body: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("region.json")).unwrap()).unwrap();
    assert!(body.is_object());
}

#[test]
fn table_region_and_fme() {
    let o = bin()
        .args(["region", "--table"])
        .arg(fixture("nine_family_tighter.json"))
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    let o = bin()
        .args(["fme-verify", "--table"])
        .arg(fixture("nine_family_tighter.json"))
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    let o = bin()
        .args(["fme-verify", "--table"])
        .arg(fixture("projection_counterexample.json"))
        .output()
        .unwrap();
    assert_eq!(code(&o), 1);
}

#[test]
fn random_fme_sweep_passes() {
    let o = run(&["fme-verify", "--trials", "5", "--Ka", "2", "--Kb", "1", "--seed", "3"]);
    assert_eq!(code(&o), 0);
    let body: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(body["failures"].as_array().unwrap().len(), 0);
}

#[test]
fn det_sim_round_trip() {
    let o = run(&["det-sim", "--K", "2", "--alpha", "1", "--q", "3", "--uses", "100"]);
    assert_eq!(code(&o), 0);
    let body: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(body.to_string().contains("1/3"));
    let o = run(&["det-sim", "--alpha", "2", "--q", "4", "--uses", "50", "--timeshare"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn infeasible_configuration_exits_3() {
    assert_eq!(code(&run(&["det-sim", "--K", "2", "--alpha", "3/4", "--q", "12"])), 3);
    assert_eq!(code(&run(&["det-sim", "--K", "2", "--alpha", "1/2", "--q", "5"])), 3);
}

#[test]
fn malformed_input_exits_2() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"Ka\": 1,").unwrap();
    let o = bin().args(["gap", "--channel"]).arg(&bad).output().unwrap();
    assert_eq!(code(&o), 2);
    let o = bin()
        .args(["gap", "--channel"])
        .arg(dir.path().join("missing.json"))
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
    assert_eq!(code(&run(&["gdof-curve", "--step", "x/y"])), 2);
}

#[test]
fn sweeps_are_deterministic() {
    let args = ["dm-verify", "--trials", "4", "--seed", "2"];
    let (a, b) = (run(&args), run(&args));
    assert_eq!(a.stdout, b.stdout);
    let args = ["gap", "--random", "3", "--seed", "5", "--max-K", "2"];
    let (a, b) = (run(&args), run(&args));
    assert_eq!(a.stdout, b.stdout);
    assert!(matches!(code(&a), 0 | 1));
}

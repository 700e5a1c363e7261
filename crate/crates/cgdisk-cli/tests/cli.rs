use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], config: Option<&str>, out: &Path) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cgdisk"));
    if let Some(text) = config {
        let path = out.join("run.json");
        std::fs::create_dir_all(out).unwrap();
        std::fs::write(&path, text).unwrap();
        cmd.arg("--config").arg(path);
    }
    cmd.arg("--out").arg(out).args(args).output().unwrap()
}

fn kv(text: &str, key: &str) -> Option<String> {
    text.lines()
        .find_map(|l| l.strip_prefix(key)?.strip_prefix(" = ").map(str::to_string))
}

#[test]
fn m_laplace_with_zero_coefficient_reproduces_cubic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{
        "system": {"builtin": "m_laplace", "order": 2, "coefficient": [0, 0]},
        "jet": {"mode": "polynomial", "entries": [
            {"i": 3, "j": 0, "value": [[6, 0]]},
            {"i": 1, "j": 2, "value": [[2, -1]]}
        ]}
    }"#;
    let o = run(&["solve"], Some(cfg), dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report = std::fs::read_to_string(dir.path().join("report.txt")).unwrap();
    let res: f64 = kv(&report, "residual_sup").unwrap().parse().unwrap();
    assert!(res <= 1e-8, "residual {res}");
    assert!(dir.path().join("config.resolved.json").exists());
    assert!(dir.path().join("convergence.csv").exists());
}

#[test]
fn bad_alpha_is_named_with_its_range() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["solve"], Some(r#"{"alpha": 1.5}"#), dir.path());
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("alpha = 1.5 outside (0, 1)"), "{err}");
}

#[test]
fn unknown_field_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["solve"], Some(r#"{"grdi": {}}"#), dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn region_of_zero_system_is_all_feasible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"system": {"builtin": "zero"}, "sweep": {"r_halvings": 6, "gamma_min_exp": -2, "gamma_max_exp": 2}}"#;
    let o = run(&["region"], Some(cfg), dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("region.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("R,gamma,delta,eta,feasible"));
    let rows: Vec<&str> = lines.collect();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r.ends_with(",true")));
}

#[test]
fn verify_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"verify": {"fields": 3, "jets": 6}}"#;
    let o = run(&["verify"], Some(cfg), dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let log = std::fs::read_to_string(dir.path().join("verify.log")).unwrap();
    assert!(log.trim_end().ends_with("failed = 0"), "{log}");
}

#[test]
fn flat_kobayashi_bounds_decrease() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"system": {"builtin": "harmonic_map"}, "n": 2, "kobayashi": {"doublings": 4}}"#;
    let o = run(&["kobayashi"], Some(cfg), dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("kobayashi.csv")).unwrap();
    let bounds: Vec<f64> = csv
        .lines()
        .skip(1)
        .filter_map(|l| l.split(',').nth(2).filter(|b| !b.is_empty())?.parse().ok())
        .collect();
    assert!(bounds.len() >= 2, "{csv}");
    assert!(bounds.windows(2).all(|w| w[1] <= w[0]), "{csv}");
}

#[test]
fn unknown_demo_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["demo", "nope"], None, dir.path());
    assert_eq!(o.status.code(), Some(1));
}

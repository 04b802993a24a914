use serde_json::Value;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn hypsym(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hypsym")).args(args).env("HYPSYM_OUT", out).output().expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

#[test]
fn roots_prints_quadratic_case() {
    let d = tempfile::tempdir().unwrap();
    let o = hypsym(&["roots", "--n", "3", "--p", "2", "--lambda", "0.75"], d.path());
    assert!(o.status.success());
    assert_eq!(String::from_utf8(o.stdout).unwrap(), "lambda_max=1\np_star=6\nbeta=0.5\nalpha=1.5\n");
}

#[test]
fn shoot_reports_fast_decay() {
    let d = tempfile::tempdir().unwrap();
    let o = hypsym(&["shoot", "--n", "3", "--p", "2", "--q", "4", "--lambda", "0"], d.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&d.path().join("shoot.json"));
    assert!((v["result"]["decay"]["rate"].as_f64().unwrap() - 2.0).abs() < 1e-3);
    assert_eq!(v["passed"], true);
    assert_eq!(v["input_hash"].as_str().unwrap().len(), 64);
    let csv = fs::read_to_string(d.path().join("profile.csv")).unwrap();
    assert!(csv.starts_with("t,u,du,flux\n") && !csv.contains('\r'));
    let first = csv.lines().nth(1).unwrap();
    assert!(first.split(',').all(|f| f.trim_start_matches('-').chars().filter(|c| c.is_ascii_digit()).count() <= 17));
}

#[test]
fn verify_all_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["verify", "all", "--seed", "42", "--samples", "2000"];
    let oa = hypsym(&args, a.path());
    let ob = hypsym(&args, b.path());
    assert!(oa.status.success(), "{}", String::from_utf8_lossy(&oa.stdout));
    assert_eq!(oa.stdout, ob.stdout);
    let ja = fs::read(a.path().join("verify_all.json")).unwrap();
    assert_eq!(ja, fs::read(b.path().join("verify_all.json")).unwrap());
    let v: Value = serde_json::from_slice(&ja).unwrap();
    assert!(v["rows"].as_array().unwrap().len() > 20);
}

#[test]
fn pohozaev_round_trip_through_files() {
    let d = tempfile::tempdir().unwrap();
    let o = hypsym(&["shoot", "--n", "4", "--p", "2", "--q", "4", "--alpha", "2"], d.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let dir = d.path().to_str().unwrap();
    let o = hypsym(&["verify", "pohozaev", "--in", dir], d.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let v = json(&d.path().join("verify_pohozaev.json"));
    let rows = v["rows"].as_array().unwrap();
    let trips: Vec<&Value> = rows.iter().filter(|r| r["check"].as_str().unwrap().starts_with("roundtrip")).collect();
    assert_eq!(trips.len(), 4);
    assert!(trips.iter().all(|r| r["value"].as_f64().unwrap() <= 1e-12));
}

#[test]
fn exit_codes() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(hypsym(&["frobnicate"], d.path()).status.code(), Some(2));
    assert_eq!(hypsym(&["roots", "--n", "3"], d.path()).status.code(), Some(2));
    assert_eq!(hypsym(&["roots", "--n", "3", "--p", "4"], d.path()).status.code(), Some(2));
    assert_eq!(hypsym(&["verify", "geometry", "--in", "x"], d.path()).status.code(), Some(2));
    // a subcritical profile carries no Pohozaev data
    assert!(hypsym(&["shoot", "--n", "3", "--p", "2", "--q", "4", "--alpha", "1"], d.path()).status.success());
    let dir = d.path().to_str().unwrap();
    assert_eq!(hypsym(&["verify", "pohozaev", "--in", dir], d.path()).status.code(), Some(2));
    // no ground state at the critical exponent with λ = 0
    let o = hypsym(&["shoot", "--n", "3", "--p", "2", "--q", "6"], d.path());
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(json(&d.path().join("shoot.json"))["passed"], false);
}

#[test]
fn config_file_fills_missing_flags() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("run.cfg");
    fs::write(&cfg, "# roots of the quadratic case\nn = 5\np = 2\nlambda = 0.75\n").unwrap();
    let c = cfg.to_str().unwrap();
    let o = hypsym(&["roots", "--config", c, "--n", "3"], d.path());
    assert!(o.status.success());
    assert!(String::from_utf8(o.stdout).unwrap().contains("alpha=1.5\n"));
    fs::write(&cfg, "n = 3\nwidth = 2\n").unwrap();
    assert_eq!(hypsym(&["roots", "--config", c, "--p", "2"], d.path()).status.code(), Some(2));
}

#[test]
fn scan_and_report() {
    let d = tempfile::tempdir().unwrap();
    let o = hypsym(&["scan-critical", "--n", "3", "--p", "2", "--alphas", "0.01:100:9"], d.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let csv = fs::read_to_string(d.path().join("scan.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "alpha,classification,cross_time,logderiv_tail");
    assert_eq!(csv.lines().count(), 10);
    assert!(csv.lines().skip(1).all(|l| l.contains(",SLOW,")));
    assert_eq!(hypsym(&["scan-critical", "--n", "3", "--p", "2", "--alphas", "2,1"], d.path()).status.code(), Some(2));

    let o = hypsym(&["minimize", "--n", "3", "--p", "2", "--q", "4", "--grid", "400"], d.path());
    assert!(o.status.success());
    assert!(d.path().join("minimizer.csv").exists());

    let dir = d.path().to_str().unwrap();
    let o = hypsym(&["report", "--in", dir], d.path());
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("scan-critical") && text.contains("minimize") && text.contains("2 reports"));

    let o = hypsym(&["shoot", "--n", "3", "--p", "2", "--q", "6"], d.path());
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(hypsym(&["report", "--in", dir], d.path()).status.code(), Some(1));
}

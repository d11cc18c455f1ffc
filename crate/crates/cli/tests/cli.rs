use std::path::Path;
use std::process::{Command, Output};

fn spinline(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spinline"))
        .args(args)
        .current_dir(dir)
        .env_remove("SPINLINE_CACHE_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn presets_lists_every_name() {
    let dir = tempfile::tempdir().unwrap();
    let o = spinline(dir.path(), &["presets"]);
    assert!(o.status.success());
    let list: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let names: Vec<_> = list.as_array().unwrap().iter().map(|p| p["name"].as_str().unwrap().to_owned()).collect();
    assert_eq!(names, ["asym-n20", "asym-n60", "sym-n20", "minimal5"]);
}

#[test]
fn region_csv_has_the_documented_header() {
    let dir = tempfile::tempdir().unwrap();
    let o = spinline(dir.path(), &["region", "--preset", "minimal5", "--scenario", "is01", "--grid-step", "0.5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "scenario,alpha11,alpha12,alpha21,alpha22,phi11,phi12,phi21,phi22,lambda,beta1,beta2"
    );
    let rows: Vec<_> = lines.collect();
    assert_eq!(rows.len(), 9);
    assert!(rows.iter().all(|r| r.starts_with("IS01,") && r.split(',').count() == 12));
}

#[test]
fn receiver_routes_agree() {
    let dir = tempfile::tempdir().unwrap();
    let base = ["receiver", "--preset", "minimal5", "--scenario", "IS11", "--alpha", "0.3,0.4,0.2,0.6"];
    let run = |route: &str| {
        let mut args = base.to_vec();
        args.extend(["--route", route]);
        let o = spinline(dir.path(), &args);
        assert!(o.status.success(), "{}", stderr(&o));
        let row = stdout(&o).lines().nth(1).unwrap().to_owned();
        row.split(',').take(3).map(|v| v.parse::<f64>().unwrap()).collect::<Vec<_>>()
    };
    let (a, b) = (run("fermion"), run("dense"));
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-9, "{a:?} vs {b:?}");
    }
}

#[test]
fn gate1_writes_curve_summary_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let o = spinline(
        dir.path(),
        &["gate1", "--preset", "minimal5", "--lambda-grid", "0.7:0.9:0.1", "--out", "gate1.csv"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let summary = read_json(&dir.path().join("gate1.csv.summary.json"));
    let interval = summary["interval"].as_array().unwrap();
    assert!((interval[0].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-9);
    assert!((interval[1].as_f64().unwrap() - 0.933064).abs() < 1e-5);
    let curve = std::fs::read_to_string(dir.path().join("gate1.csv")).unwrap();
    assert_eq!(curve.lines().count(), 1 + 2 + 3);
    let manifest = read_json(&dir.path().join("gate1.csv.manifest.json"));
    assert_eq!(manifest["command"], "gate1");
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 2);
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = spinline(dir.path(), &["receiver", "--preset", "minimal5", "--bogus"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn negative_coupling_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = spinline(dir.path(), &["receiver", "--preset", "asym-n20", "--delta3", "-1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("-1"), "{}", stderr(&o));
}

#[test]
fn unknown_config_keys_are_all_listed() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.json"), r#"{"preset":"minimal5","bogus":1,"gate2":{"zzz":2}}"#).unwrap();
    let o = spinline(dir.path(), &["gate2", "--config", "c.json"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("bogus") && err.contains("gate2.zzz"), "{err}");
}

#[test]
fn missing_option_names_the_flag() {
    let dir = tempfile::tempdir().unwrap();
    let o = spinline(dir.path(), &["receiver", "--topology", "asymmetric", "--n1", "20"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--delta1"), "{}", stderr(&o));
}

#[test]
fn absent_seed_is_recorded_as_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = spinline(dir.path(), &["gate2", "--preset", "minimal5", "--samples", "50", "--out", "g.csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let manifest = read_json(&dir.path().join("g.csv.manifest.json"));
    assert_eq!(manifest["seed"], 0);
    assert_eq!(manifest["manifest_version"], 1);
    assert_eq!(manifest["config"]["gate2"]["samples"], 50);
}

#[test]
fn manifest_reruns_reproduce_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let o = spinline(
        dir.path(),
        &["gate2", "--preset", "minimal5", "--samples", "200", "--seed", "11", "--out", "a.csv"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let o = spinline(dir.path(), &["gate2", "--config", "a.csv.manifest.json", "--out", "b.csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert!(a.len() > 100);
    assert_eq!(a, b);
    let ma = read_json(&dir.path().join("a.csv.manifest.json"));
    let mb = read_json(&dir.path().join("b.csv.manifest.json"));
    assert_eq!(mb["seed"], 11);
    assert_ne!(ma["config_hash"], mb["config_hash"]);
}

#[test]
fn flags_override_config_values() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.json"), r#"{"preset":"minimal5","transfer":{"to":5}}"#).unwrap();
    let o = spinline(dir.path(), &["transfer", "--config", "c.json", "--to", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["to"], 3);
    assert!((v["p_star"].as_f64().unwrap() - 0.5).abs() < 1e-6);
}

#[test]
fn cache_directory_is_used_and_reused() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    std::fs::create_dir(&cache).unwrap();
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_spinline"))
            .args(["receiver", "--preset", "sym-n20", "--alpha", "0.2,0.7,0.4,0.1"])
            .env("SPINLINE_CACHE_DIR", &cache)
            .output()
            .unwrap()
    };
    let first = run();
    assert!(first.status.success(), "{}", stderr(&first));
    assert_eq!(std::fs::read_dir(&cache).unwrap().count(), 1);
    let second = run();
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn gates_reject_off_center_receivers() {
    let dir = tempfile::tempdir().unwrap();
    for gate in ["gate1", "gate2"] {
        let o = spinline(dir.path(), &[gate, "--preset", "asym-n20"]);
        assert_eq!(o.status.code(), Some(2), "{gate}");
        assert!(stderr(&o).contains("central receiver"));
    }
}

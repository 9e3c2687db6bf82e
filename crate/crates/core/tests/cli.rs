use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use sndp::instance::{serialize_instance, tri3a, tri3b};
use sndp::report::BENCH_COLUMNS;
use tempfile::TempDir;

fn sndp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sndp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn solve_then_verify() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "tri3a.json", &serialize_instance(&tri3a()));
    let out = dir.path().join("out.json");
    let log = dir.path().join("log.jsonl");
    let o = sndp(&["solve", "-i", s(&inst), "--method", "dsg", "-o", s(&out), "--log", s(&log)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(doc["objective"].as_f64(), Some(5.0));
    assert_eq!(doc["design"], serde_json::json!([12, 13, 23]));
    assert_eq!(doc["theta_verified"], Value::Bool(true));
    let lines = std::fs::read_to_string(&log).unwrap();
    assert!(lines.lines().count() >= 1);
    for line in lines.lines() {
        let rec: Value = serde_json::from_str(line).unwrap();
        assert!(rec["t"].as_u64().is_some());
    }

    let o = sndp(&["verify", "-i", s(&inst), "--design", s(&out)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("pass, worst shed 0"), "{}", stdout(&o));
}

#[test]
fn every_method_agrees_from_the_command_line() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "tri3b.json", &serialize_instance(&tri3b()));
    for method in ["ef", "bd", "dsg"] {
        let o = sndp(&["solve", "-i", s(&inst), "--method", method]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let doc: Value = serde_json::from_str(&stdout(&o)).unwrap();
        assert!((doc["objective"].as_f64().unwrap() - 45.0).abs() < 1e-6);
        assert!((doc["theta"].as_f64().unwrap() - 0.4).abs() < 1e-6);
    }
}

#[test]
fn verify_reports_failure_without_error() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "tri3b.json", &serialize_instance(&tri3b()));
    let design = write(&dir, "all.json", "[12, 13, 23]");
    let o = sndp(&["verify", "-i", s(&inst), "--design", s(&design)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("fail, worst shed 0.4"), "{}", stdout(&o));
}

#[test]
fn overrides_apply() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "tri3a.json", &serialize_instance(&tri3a()));
    let o = sndp(&["solve", "-i", s(&inst), "--budget", "0"]);
    let doc: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["objective"].as_f64(), Some(2.0));
    let o = sndp(&["solve", "-i", s(&inst), "--budget", "2", "--eps", "1"]);
    let doc: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["build_cost"].as_f64(), Some(0.0));
}

#[test]
fn input_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("missing.json");
    assert_eq!(sndp(&["solve", "-i", s(&missing)]).status.code(), Some(2));
    let bad = write(&dir, "bad.json", &serialize_instance(&tri3a()).replace("-10.0", "-9.0"));
    let o = sndp(&["solve", "-i", s(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("injections do not sum to zero"));
    let broken = write(&dir, "broken.json", "{ nodes: }");
    let o = sndp(&["solve", "-i", s(&broken)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 1"));
    let inst = write(&dir, "tri3a.json", &serialize_instance(&tri3a()));
    assert_eq!(sndp(&["solve", "-i", s(&inst), "--method", "cplex"]).status.code(), Some(2));
    assert_eq!(sndp(&["solve", "-i", s(&inst), "--eps", "2"]).status.code(), Some(2));
    assert_eq!(sndp(&["frobnicate"]).status.code(), Some(2));
    let unknown = write(&dir, "d.json", "[99]");
    assert_eq!(sndp(&["verify", "-i", s(&inst), "--design", s(&unknown)]).status.code(), Some(2));
}

#[test]
fn solver_errors_exit_with_one() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "tri3a.json", &serialize_instance(&tri3a()));
    let o = sndp(&["solve", "-i", s(&inst), "--method", "ef", "--scenario-cap", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("use dsg"), "{}", stderr(&o));
}

#[test]
fn help_for_every_subcommand() {
    for sub in ["solve", "verify", "gen", "sweep", "bench"] {
        let o = sndp(&[sub, "--help"]);
        assert_eq!(o.status.code(), Some(0));
        assert!(stdout(&o).contains("Usage"));
    }
}

#[test]
fn generation_is_reproducible() {
    let args = ["gen", "--family", "replicated", "--nodes", "9", "--factor", "3", "--seed", "4"];
    let a = sndp(&args);
    let b = sndp(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let c = sndp(&["gen", "--family", "replicated", "--nodes", "9", "--factor", "3", "--seed", "5"]);
    assert_ne!(a.stdout, c.stdout);
    assert_eq!(sndp(&["gen", "--nodes", "0"]).status.code(), Some(2));
}

#[test]
fn sweep_writes_a_table() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "tri3b.json", &serialize_instance(&tri3b()));
    let o = sndp(&["sweep", "-i", s(&inst), "--eps", "0,0.5,1", "--budgets", "0,1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("eps,budget,build_cost,worst_shed,design,error"));
    assert_eq!(lines.count(), 6);
}

#[test]
fn bench_writes_the_fixed_columns() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "tri3a.json", &serialize_instance(&tri3a()));
    let csv = dir.path().join("bench.csv");
    let o = sndp(&["bench", "-i", s(&inst), "--timeout", "30", "-o", s(&csv), "--parallel"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("warning"));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), BENCH_COLUMNS.join(","));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.starts_with("tri3a,3,1,3,")));
}

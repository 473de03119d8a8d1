use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn lgraph(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lgraph")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn k3(dir: &TempDir) -> PathBuf {
    write(dir, "k3.json", r#"{"k": 3, "edges": [[1,2],[2,3],[1,3]]}"#)
}

#[test]
fn optimize_triangle() {
    let dir = TempDir::new().unwrap();
    let g = k3(&dir);
    let o = lgraph(&["optimize", "--graph", s(&g)]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.starts_with("exponent: 9/7\n"), "{out}");
    assert!(out.contains("Value"));
    let md = stdout(&lgraph(&["optimize", "--graph", s(&g), "--format", "md"]));
    assert!(md.contains("| Stage | setup |"));
    let tsv = stdout(&lgraph(&["optimize", "--graph", s(&g), "--format", "tsv"]));
    assert!(tsv.contains("Stage\tsetup\t"));
}

#[test]
fn all_schedules_equals_the_best_single_schedule() {
    let dir = TempDir::new().unwrap();
    let g = k3(&dir);
    let all = stdout(&lgraph(&["optimize", "--graph", s(&g), "--all-schedules"]));
    let listing = stdout(&lgraph(&["schedules", "--graph", s(&g)]));
    let schedules: Vec<&str> = listing.lines().filter(|l| !l.starts_with("count")).collect();
    assert_eq!(schedules.len(), 48);
    assert!(listing.ends_with("count: 48\n"));
    let mut best: Option<lgraph::Rational> = None;
    for sched in schedules {
        let out = stdout(&lgraph(&["optimize", "--graph", s(&g), "--schedule", sched]));
        let v: lgraph::Rational = out.lines().next().unwrap().strip_prefix("exponent: ").unwrap().parse().unwrap();
        best = Some(best.map_or(v.clone(), |b| b.min(v)));
    }
    assert_eq!(all.lines().next().unwrap(), format!("exponent: {}", best.unwrap()));
    assert_eq!(stdout(&lgraph(&["schedules", "--graph", s(&g), "--count-only"])), "count: 48\n");
}

#[test]
fn preset_tables() {
    let o = lgraph(&["table", "--preset", "associativity"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("setup: 10/7"));
    assert!(out.contains("load a_1") && out.contains("load a_5∘a_4"));
    let values: Vec<&str> = out.lines().filter(|l| l.starts_with("Value")).collect();
    assert_eq!(values.len(), 3);
    let flat: Vec<&str> = values.iter().flat_map(|l| l.split_whitespace().skip(1)).collect();
    assert_eq!(flat, ["13/14", "19/14", "10/7", "10/7", "10/7", "19/14", "19/14", "15/14", "10/7"]);
    assert!(out.ends_with("exponent: 10/7\n"));
    let tri = stdout(&lgraph(&["table", "--preset", "triangle", "--format", "tsv"]));
    let value = tri.lines().find(|l| l.starts_with("Value")).unwrap();
    assert_eq!(value, "Value\t9/7\t17/14\t9/7\t15/14\t9/7\t17/14\t9/7");
}

#[test]
fn output_is_deterministic_and_fraction_only() {
    let dir = TempDir::new().unwrap();
    let g = write(&dir, "p4.json", r#"{"k": 4, "edges": [[1,2],[2,3],[3,4]]}"#);
    let a = lgraph(&["optimize", "--graph", s(&g)]);
    let b = lgraph(&["optimize", "--graph", s(&g)]);
    assert_eq!(a.stdout, b.stdout);
    let out = stdout(&a);
    // exponents and parameters are written as fractions
    assert!(!out.contains('.'), "{out}");
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(lgraph(&["optimize", "--bogus"]).status.code(), Some(2));
    assert_eq!(lgraph(&[]).status.code(), Some(2));
    assert_eq!(lgraph(&["table", "--preset", "square"]).status.code(), Some(2));
    let o = lgraph(&["certify", "--problem", "subgraph", "--input", "x.txt"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
}

#[test]
fn domain_errors_exit_1() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.json", r#"{"k": 2, "edges": [[1,3]]}"#);
    let o = lgraph(&["optimize", "--graph", s(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
    let o = lgraph(&["verify-lg", "--n", "10", "--r1", "2", "--r2", "3", "--lam", "1"]);
    assert_eq!(o.status.code(), Some(1));
    let g = k3(&dir);
    assert_eq!(lgraph(&["optimize", "--graph", s(&g), "--schedule", "1,e(1,2),2"]).status.code(), Some(1));
}

#[test]
fn verify_learning_graph() {
    let args = ["verify-lg", "--n", "9", "--r1", "2", "--r2", "4", "--lam", "1", "--seed", "5"];
    let o = lgraph(&args);
    assert!(o.status.success(), "{}", stdout(&o));
    let out = stdout(&o);
    assert!(out.contains("flows verified: 504 placements, ok"));
    assert_eq!(out.matches("lemma equal").count(), 6);
    assert_eq!(lgraph(&args).stdout, o.stdout);
}

#[test]
fn certify_commands() {
    let dir = TempDir::new().unwrap();
    let sub = write(&dir, "sub.txt", "3\n0 2 1\n1 0 2\n2 1 0\n");
    let out = stdout(&lgraph(&["certify", "--problem", "assoc", "--input", s(&sub)]));
    assert!(out.starts_with("witness: (0,0,1)\n"), "{out}");
    assert!(out.contains("minimal certificates:"));
    let add = write(&dir, "add.txt", "3\n0 1 2\n1 2 0\n2 0 1\n");
    let out = stdout(&lgraph(&["certify", "--problem", "assoc", "--input", s(&add)]));
    assert_eq!(out, "associative\nminimal certificates: 0\n");

    let table = write(&dir, "k3.txt", "3\n0 1 1\n0 0 1\n0 0 0\n");
    let g = k3(&dir);
    let out = stdout(&lgraph(&["certify", "--problem", "subgraph", "--input", s(&table), "--graph", s(&g)]));
    assert!(out.starts_with("embedding: (0,1,2)\nminimal certificates: 1\n"), "{out}");
    let bad = write(&dir, "bad.txt", "2\n0 5\n0 0\n");
    assert_eq!(lgraph(&["certify", "--problem", "assoc", "--input", s(&bad)]).status.code(), Some(1));
}

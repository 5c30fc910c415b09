use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_polar-ldgm"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn run_with_stdin(args: &[&str], input: &str) -> Output {
    let mut child = bin()
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn json_ok(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn no_arguments_prints_usage_and_fails() {
    let out = run(&[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn help_and_bad_flags() {
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("rateloss"));
    let out = run(&["rateloss", "--n", "4", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
    let out = run(&["rateloss", "--n", "4"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
}

#[test]
fn tables_emit_strict_csv() {
    let out = run(&["tables"]);
    assert!(out.status.success());
    let mut reader = csv::Reader::from_reader(out.stdout.as_slice());
    let headers = reader.headers().unwrap().clone();
    for col in ["kernel", "exponent", "lambda_mc_limit", "lambda_max_limit"] {
        assert!(headers.iter().any(|h| h == col), "missing {col}");
    }
    let kernels: Vec<String> = reader.records().map(|r| r.unwrap()[0].to_string()).collect();
    assert_eq!(kernels, ["G2", "G3*", "G4*", "G3'", "G4'"]);
}

#[test]
fn rate_loss_example() {
    let v = json_ok(&["rateloss", "--n", "4", "--wub", "4"]);
    assert_eq!(v["R_exact"], "7/16");
    let out = run(&["--format", "csv", "rateloss", "--n", "4", "--wub", "4"]);
    let mut reader = csv::Reader::from_reader(out.stdout.as_slice());
    let idx = reader.headers().unwrap().iter().position(|h| h == "R_exact").unwrap();
    assert_eq!(&reader.records().next().unwrap().unwrap()[idx], "7/16");
    let v = json_ok(&["rateloss", "--n", "64", "--epsilon-prime", "0.2"]);
    assert_eq!(v["regime"], "Vanishing");
}

#[test]
fn kernel_commands() {
    let v = json_ok(&["kernel", "analyze", "g4'"]);
    assert_eq!(v["partial_distances"], serde_json::json!([1, 2, 2, 2]));
    let v = json_ok(&["kernel", "search", "--l", "3"]);
    let ratio = v["ratio"].as_f64().unwrap();
    assert!((ratio - 0.7925).abs() < 1e-3);
    let out = run(&["kernel", "analyze", "nonsense"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
}

#[test]
fn construct_then_simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    let spec_s = spec.to_str().unwrap();
    let out = run(&["--output", spec_s, "construct", "--n", "6", "--channel", "bec:0.5", "--rate", "0.25"]);
    assert!(out.status.success());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&spec).unwrap()).unwrap();
    assert_eq!(v["N"], 64);
    assert_eq!(v["K"], 16);
    let args = ["simulate", "--spec", spec_s, "--channel", "bec:0.5", "--trials", "2000", "--seed", "4"];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let r: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(r["trials"], 2000);
    assert!(r["bler"].as_f64().unwrap() < 0.1);
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn split_and_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let gen = write(dir.path(), "g.json", r#"{"rows": 2, "columns": [[0, 1], [1], [0, 1], []]}"#);
    let v = json_ok(&["split", "--wub", "1", "--gen", &gen]);
    assert_eq!(v["report"]["R"], "1/2");
    assert_eq!(v["generator"]["columns"].as_array().unwrap().len(), 6);

    let out = run_with_stdin(&["oracle", "--channel", "bsc:1/10", "--split", "0:1"], r#"{"rows": 2, "columns": [[0, 1], [1], [0, 1]]}"#);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["split_cols"], 4);
    let frac = |s: &Value| {
        let (p, q) = s.as_str().unwrap().split_once('/').unwrap();
        p.parse::<f64>().unwrap() / q.parse::<f64>().unwrap()
    };
    assert!(frac(&v["split_pe_sc"]) <= frac(&v["pe_sc"]));
    assert!(frac(&v["pe_ml"]) <= frac(&v["pe_sc"]));
}

#[test]
fn oracle_refuses_large_codes() {
    let dir = tempfile::tempdir().unwrap();
    let columns: Vec<Vec<usize>> = (0..12).map(|j| vec![j]).collect();
    let text = serde_json::json!({ "rows": 12, "columns": columns }).to_string();
    let gen = write(dir.path(), "big.json", &text);
    let out = run(&["oracle", "--gen", &gen, "--channel", "bsc:0.1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    assert!(!out.stderr.is_empty());
}

#[test]
fn crowd_reports_and_dumps_queries() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("queries.txt");
    let v = json_ok(&[
        "crowd", "--n", "1500", "--p", "0.05", "--q", "0.02", "--zeta", "0.3", "--trials", "3",
        "--selection-trials", "300", "--dump-queries", dump.to_str().unwrap(),
    ]);
    for key in ["m_prime", "max_items", "m_bsc", "ratio", "success_rate"] {
        assert!(!v[key].is_null(), "missing {key}");
    }
    let text = std::fs::read_to_string(&dump).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len() as u64, v["m_prime"].as_u64().unwrap());
    let widest = lines.iter().map(|l| l.split_whitespace().count()).max().unwrap();
    assert_eq!(widest as u64, v["max_items"].as_u64().unwrap());
    assert!(lines.iter().flat_map(|l| l.split_whitespace()).all(|t| t.parse::<usize>().unwrap() < 1500));
}

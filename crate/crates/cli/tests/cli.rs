use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn sode(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sode")).args(args).output().expect("spawn sode")
}

fn json(args: &[&str]) -> Value {
    let mut full = vec!["--json"];
    full.extend_from_slice(args);
    let out = sode(&full);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json report")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.display().to_string()
}

#[test]
fn classify_exponential_is_3c() {
    let r = json(&["classify", "exp(-p)"]);
    assert_eq!(r["result"]["family"], "3c");
    assert_eq!(r["result"]["symmetry"]["dimension"], 3);
    assert_eq!(r["schema"], "1");
}

#[test]
fn classify_linearizable() {
    let r = json(&["classify", "p^3"]);
    assert_eq!(r["result"]["family"], "linearizable");
    assert_eq!(r["result"]["symmetry"]["dimension"], 8);
    let r = json(&["classify", "--no-dimension", "y"]);
    assert_eq!(r["result"]["family"], "linearizable");
}

#[test]
fn invariants_of_quartic() {
    let r = json(&["invariants", "p^4"]);
    assert_eq!(r["result"]["scalars"]["d"], "-4");
    assert_eq!(r["result"]["vanishing"]["a"], "nonzero");
}

#[test]
fn frobenius_contact_and_coordinate_forms() {
    let dir = tempfile::tempdir().unwrap();
    let contact = write(dir.path(), "contact.json", r#"{"forms": [["-z", "1", "0"]]}"#);
    let r = json(&["frobenius", &contact]);
    assert_eq!(r["result"]["verdict"], "not integrable");
    assert!(!r["result"]["witnesses"].as_array().unwrap().is_empty());
    let dy = write(dir.path(), "dy.json", r#"{"forms": [["0", "1", "0"]]}"#);
    assert_eq!(json(&["frobenius", &dy])["result"]["verdict"], "integrable");
    let gens = write(dir.path(), "gens.json", r#"{"generators": [["1", "0", "0"], ["0", "1", "0"]]}"#);
    assert_eq!(json(&["frobenius", &gens])["result"]["verdict"], "integrable");
    let heis = write(dir.path(), "heis.json", r#"{"generators": [["1", "0", "0"], ["0", "1", "x"]]}"#);
    assert_eq!(json(&["frobenius", &heis])["result"]["verdict"], "not integrable");
}

#[test]
fn develop_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("dev.csv");
    let r = json(&["develop", "--geodesic", "0,0,1", "--t1", "0.5", "--out", out.to_str().unwrap()]);
    assert!(r["result"]["max_collinearity"].as_f64().unwrap() < 1e-8);
    let text = std::fs::read_to_string(out).unwrap();
    assert!(text.starts_with("t,p0,p1,p2"));
    assert_eq!(text.lines().count(), 502);
}

#[test]
fn g_integrate_and_superpose() {
    let r = json(&["g-integrate", "--matrix", "0,-1;1,0", "--traceless", "--t1", "1"]);
    let c = r["result"]["end"][0][0].as_f64().unwrap();
    assert!((c - 1f64.cos()).abs() < 1e-10);
    let r = json(&["superpose", "--matrix", "0,-1;1,0", "--b", "1,2"]);
    assert!(r["result"]["max_error_vs_direct"].as_f64().unwrap() < 1e-10);
}

#[test]
fn output_is_deterministic() {
    let args = ["--json", "--seed", "7", "classify", "exp(-p)"];
    assert_eq!(sode(&args).stdout, sode(&args).stdout);
}

#[test]
fn exit_codes() {
    assert_eq!(sode(&["--help"]).status.code(), Some(0));
    assert_eq!(sode(&["--version"]).status.code(), Some(0));
    assert_eq!(sode(&["nonsense"]).status.code(), Some(1));
    assert_eq!(sode(&["classify", "exp("]).status.code(), Some(1));
    assert_eq!(sode(&["classify", "p", "--box", "x:1"]).status.code(), Some(1));
    assert_eq!(sode(&["develop"]).status.code(), Some(1));
}

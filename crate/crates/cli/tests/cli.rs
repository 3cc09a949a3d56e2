use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_equidist"));
    c.env_remove("EQUIDIST_OUTPUT_DIR");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn schema_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas")
}

fn validate(command: &str, doc: &Value) {
    let text = std::fs::read_to_string(schema_dir().join(format!("{command}.schema.json"))).unwrap();
    let schema: Value = serde_json::from_str(&text).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator.iter_errors(doc).map(|e| format!("{} at {}", e, e.instance_path())).collect();
    assert!(errors.is_empty(), "{command}: {errors:#?}");
}

fn json_of(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn enumerate_csv_has_24_rows() {
    let out = run(&["enumerate", "--n", "11", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# run: {"));
    assert_eq!(lines.next().unwrap(), "n,x1,x2,x3,ux,uy,uz");
    assert_eq!(lines.count(), 24);
}

#[test]
fn every_command_validates_against_its_schema() {
    let cases: Vec<(&str, Vec<&str>)> = vec![
        ("enumerate", vec!["enumerate", "--n", "11"]),
        ("forms", vec!["forms", "--d", "-23"]),
        ("forms", vec!["forms", "--d", "13"]),
        ("geodesics", vec!["geodesics", "--d", "5", "--paths"]),
        ("variance", vec!["variance", "--n", "11,19", "--r", "0.8", "--R", "0.9", "--samples", "2000", "--lmax", "100"]),
        ("variance", vec!["variance", "--d", "-23,5", "--r", "0.2", "--R", "0.8", "--samples", "500"]),
        ("variance", vec!["variance", "--random", "50", "--r", "0.3", "--R", "0.6", "--samples", "500"]),
        ("linnik", vec!["linnik", "--n", "1003", "--psi", "1.0", "--samples", "200"]),
        ("linnik", vec!["linnik", "--lo", "1000", "--hi", "1200"]),
        ("covering", vec!["covering", "--n", "3", "--grid", "16"]),
        ("transforms", vec!["transforms", "--r", "0.3", "--R", "0.6", "--fmax", "20", "--steps", "5"]),
        ("transforms", vec!["transforms", "--space", "hyperbolic", "--r", "0.3", "--R", "0.6", "--freq", "0,2.5,10"]),
        ("check", vec!["check", "--suite", "hfactor"]),
    ];
    for (cmd, args) in cases {
        let doc = json_of(&run(&args));
        assert_eq!(doc["config"]["command"], cmd);
        validate(cmd, &doc);
    }
}

#[test]
fn variance_example_has_ratio_fields() {
    let doc = json_of(&run(&["variance", "--n", "11", "--r", "0.8", "--R", "0.9", "--samples", "100000", "--seed", "7", "--lmax", "400"]));
    let rep = &doc["result"][0];
    for key in ["ratio_mc", "ratio_spectral", "seed", "samples", "Lmax"] {
        assert!(!rep[key].is_null(), "{key}");
    }
    assert_eq!(rep["seed"], 7);
    assert_eq!(doc["config"]["parameters"]["lmax"], 400);
}

#[test]
fn replay_is_byte_identical() {
    let args = ["variance", "--n", "19", "--r", "0.5", "--R", "0.7", "--samples", "3000", "--seed", "3", "--format", "csv"];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let mut c_args = args.to_vec();
    c_args.extend(["--threads", "1"]);
    assert_eq!(a.stdout, run(&c_args).stdout);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["variance", "--n", "15", "--r", "0.1", "--R", "0.5"]).status.code(), Some(1));
    let e = run(&["variance", "--n", "23", "--r", "0.1", "--R", "0.5"]);
    assert!(String::from_utf8_lossy(&e.stderr).contains("empty point set"));
    assert_eq!(run(&["enumerate", "--n", "2000000000"]).status.code(), Some(3));
    assert_eq!(run(&["check", "--suite", "nosuch"]).status.code(), Some(1));
    // schema violations name the offending key
    let bad = run(&["enumerate", "--n", "eleven"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("--n"));
    assert_eq!(run(&["check", "--suite", "miyake"]).status.code(), Some(0));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin().env("EQUIDIST_OUTPUT_DIR", dir.path()).args(["variance", "--n", "11", "--r", "0.3", "--R", "0.6", "--samples", "500"]).output().unwrap();
    assert!(out.status.success());
    assert!(out.stdout.is_empty(), "stdout carries data only when no file is targeted");
    let json: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("variance.json")).unwrap()).unwrap();
    validate("variance", &json);
    let csv = std::fs::read_to_string(dir.path().join("variance.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# run: "));
    assert_eq!(lines.next().unwrap(), "id,r,R,mc,mc_se,spec,tail,pred,ratio_mc,ratio_spec");
    assert!(lines.next().unwrap().starts_with("11,"));

    let explicit = dir.path().join("sub/forms.csv");
    let out = run(&["forms", "--d", "-47", "--format", "csv", "--table", "heegner", "--output", explicit.to_str().unwrap()]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&explicit).unwrap();
    assert_eq!(text.lines().nth(1), Some("D,re,im"));
    assert_eq!(text.lines().count(), 2 + 5);
}

#[test]
fn progress_goes_to_stderr() {
    let out = run(&["variance", "--n", "11", "--r", "0.3", "--R", "0.6", "--samples", "500"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("variance [1/1]"));
    let _: Value = serde_json::from_slice(&out.stdout).unwrap();
}

use std::path::Path;
use std::process::Command;

use godel_cli::{run, EXIT_INPUT, EXIT_OK, EXIT_UNSOLVED, EXIT_USAGE};
use serde_json::Value;

const UF20_01: &str = include_str!("../../core/tests/data/uf20-01.cnf");

fn godel(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("godel").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

const FAST: [&str; 8] = ["--samples", "4", "--epochs", "20000", "--lr", "1", "--noise-a", "-0.5"];

#[test]
fn usage_errors_exit_2() {
    assert_eq!(godel(&["solve", "x.cnf", "--bogus"]).0, EXIT_USAGE);
    assert_eq!(godel(&[]).0, EXIT_USAGE);
    assert_eq!(godel(&["solve", "x.cnf", "--semantics", "godel", "--noise", "uniform"]).0, EXIT_USAGE);
    assert_eq!(godel(&["solve", "x.cnf", "--lr", "0"]).0, EXIT_USAGE);
    assert_eq!(godel(&["--help"]).0, EXIT_OK);
}

#[test]
fn solve_prints_a_json_report() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "uf20-01.cnf", UF20_01);
    let curve = dir.path().join("curve.csv");
    let mut args = vec!["solve", &file, "--noise-b", "0.5", "--curve", curve.to_str().unwrap()];
    args.extend(FAST);
    let (code, out, _) = godel(&args);
    assert_eq!(code, EXIT_OK);
    let json: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(json["report"]["num_vars"], 20);
    assert_eq!(json["config"]["semantics"], "gt");
    assert!(json["report"]["witness"].is_array());
    assert!(std::fs::read_to_string(curve).unwrap().starts_with("epoch,solved_ratio\n"));
}

#[test]
fn solve_reports_unsolved_and_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let unsat = write(dir.path(), "unsat.cnf", "p cnf 1 2\n1 0\n-1 0\n");
    assert_eq!(godel(&["solve", &unsat, "--samples", "2", "--epochs", "50"]).0, EXIT_UNSOLVED);
    let bad = write(dir.path(), "bad.cnf", "p cnf 1 1\n2 0\n");
    let (code, _, err) = godel(&["solve", &bad]);
    assert_eq!(code, EXIT_INPUT);
    assert!(err.starts_with("error:"));
    assert_eq!(godel(&["solve", "/nonexistent/x.cnf"]).0, EXIT_INPUT);
}

#[test]
fn bench_respects_limit_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst");
    assert_eq!(godel(&["generate", "uf20", inst.to_str().unwrap(), "--count", "4", "--seed", "3"]).0, EXIT_OK);
    let run_once = || {
        let mut args = vec!["bench", inst.to_str().unwrap(), "--limit", "3", "--noise-b", "0.5", "--threads", "2"];
        args.extend(FAST);
        let (code, out, err) = godel(&args);
        assert_eq!(code, EXIT_OK, "{err}");
        assert!(err.contains("3 instances"));
        let mut json: Value = serde_json::from_str(&out).unwrap();
        json.as_object_mut().unwrap().remove("timing");
        json
    };
    let first = run_once();
    assert_eq!(first["instances"].as_array().unwrap().len(), 3);
    assert!(first["instances"][2]["path"].as_str().unwrap().ends_with("uf20-03.cnf"));
    assert_eq!(first, run_once());
}

#[test]
fn bench_input_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing");
    assert_eq!(godel(&["bench", missing.to_str().unwrap()]).0, EXIT_INPUT);
    assert_eq!(godel(&["bench", dir.path().to_str().unwrap()]).0, EXIT_INPUT);
}

#[test]
fn generate_writes_flat_instances() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(godel(&["generate", "flat30", dir.path().to_str().unwrap(), "--count", "2"]).0, EXIT_OK);
    let text = std::fs::read_to_string(dir.path().join("flat30-2.cnf")).unwrap();
    assert!(text.contains("p cnf 90 300"));
}

#[test]
fn prob_matches_exact_value() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "f.sexpr", "(or A B)\n");
    let (code, out, _) = godel(&["prob", &file, "--probs", "0.5,0.5", "--draws", "20000"]);
    assert_eq!(code, EXIT_OK);
    let json: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(json["exact"], 0.75);
    assert_eq!(json["within_4_sigma"], true);
    assert_eq!(godel(&["prob", &file, "--probs", "0.5"]).0, EXIT_USAGE);
}

#[test]
fn verify_passes_small_run() {
    let (code, out, _) = godel(&["verify", "--cases", "50"]);
    assert_eq!(code, EXIT_OK, "{out}");
    assert!(!out.contains("FAIL"));
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_godel");
    let status = Command::new(bin).args(["solve", "--nope"]).output().unwrap().status;
    assert_eq!(status.code(), Some(EXIT_USAGE));
    let status = Command::new(bin).arg("--version").output().unwrap().status;
    assert_eq!(status.code(), Some(EXIT_OK));
}

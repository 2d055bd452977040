use std::path::PathBuf;
use std::process::Command;

use arr_core::arr::parse_trace;
use arr_core::cli::{run, EXIT_FALSIFIED, EXIT_OK, EXIT_USAGE};

fn arrw(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("arrw").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("arrw-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn normalize_theta_of_a_line() {
    let (code, out, _) = arrw(&["normalize", "theta(2, L)"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(out.trim(), "1 + L");
}

#[test]
fn normalize_trivial_det_pattern() {
    let (code, out, _) = arrw(&["--n", "1", "normalize", "det_rf(f, (H0-H1)^3 (x) H)"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(out.trim(), "1 (trivial)");
}

#[test]
fn normalize_below_the_boundary_keeps_the_atom() {
    let (code, out, _) = arrw(&["--n", "1", "normalize", "det_rf(f, (H0-H1)^2 (x) H)"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("DetRf[f]"), "{out}");
}

#[test]
fn malformed_input_is_a_usage_error_with_position() {
    let (code, _, err) = arrw(&["normalize", "theta(2, L"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("position") || err.contains("at "), "{err}");
}

#[test]
fn normalize_reads_declarations_and_files() {
    let decls = scratch("decls.txt");
    std::fs::write(&decls, "line L\nbundle V rank 3\n").unwrap();
    let input = scratch("input.txt");
    std::fs::write(&input, "theta(2, V)\n").unwrap();
    let (code, out, err) = arrw(&["--decls", decls.to_str().unwrap(), "normalize", input.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert_eq!(out.lines().count(), 1);
    assert!(out.contains("V_1*V_2*V_3"), "{out}");
}

#[test]
fn truncation_must_be_positive() {
    assert_eq!(arrw(&["--trunc", "0", "normalize", "L"]).0, EXIT_USAGE);
}

#[test]
fn unknown_command_is_a_usage_error() {
    assert_eq!(arrw(&["frobnicate"]).0, EXIT_USAGE);
    assert_eq!(arrw(&["verify", "arr", "--p", "4"]).0, EXIT_USAGE);
}

#[test]
fn verify_arr_writes_a_valid_trace() {
    let path = scratch("arr.json");
    let (code, out, _) = arrw(&["verify", "arr", "--n", "1", "--p", "2", "--trace-json", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("(9)"), "{out}");
    let t = parse_trace(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(t.steps.len(), 9);
    assert!(t.is_verified());
}

#[test]
fn verify_mumford_prints_the_exponent() {
    let (code, out, _) = arrw(&["verify", "mumford", "--n", "3"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.split_whitespace().any(|w| w == "37"), "{out}");
}

#[test]
fn verify_deligne_has_zero_residual() {
    let (code, out, _) = arrw(&["verify", "deligne"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("residual: 0") || out.contains("residual 0"), "{out}");
}

#[test]
fn verify_other_subcommands() {
    for args in [
        &["verify", "base-change"][..],
        &["verify", "km", "--n", "2"],
        &["verify", "tau", "--n", "3", "--p", "3"],
        &["verify", "binomial", "--n", "4", "--p", "5"],
    ] {
        let (code, out, err) = arrw(args);
        assert_eq!(code, EXIT_OK, "{args:?}: {out}{err}");
    }
}

#[test]
fn suite_json_summary() {
    let (code, out, _) = arrw(&["suite", "--format", "json"]);
    assert_eq!(code, EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let cells = v.as_array().or_else(|| v["cells"].as_array()).expect("cell list");
    assert_eq!(cells.len(), 9);
    assert!(cells.iter().all(|c| c["passed"] == true));
}

#[test]
fn suite_names_an_injected_fault() {
    let (code, out, _) = arrw(&["suite", "--inject-fault", "R7"]);
    assert_eq!(code, EXIT_FALSIFIED);
    assert!(out.contains("R7") || out.contains("base-change"), "{out}");
}

#[test]
fn runs_are_deterministic() {
    assert_eq!(arrw(&["suite", "--seed", "11"]).0, EXIT_OK);
    let a = arrw(&["verify", "arr", "--format", "json", "--n", "2", "--p", "3"]).1;
    let b = arrw(&["verify", "arr", "--format", "json", "--n", "2", "--p", "3"]).1;
    assert_eq!(a, b);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_arrw");
    let status = |args: &[&str]| Command::new(bin).args(args).output().unwrap();
    let ok = status(&["normalize", "theta(2, L)"]);
    assert_eq!(ok.status.code(), Some(EXIT_OK));
    assert_eq!(String::from_utf8_lossy(&ok.stdout).trim(), "1 + L");
    assert_eq!(status(&["normalize", "(("]).status.code(), Some(EXIT_USAGE));
    assert_eq!(status(&["suite", "--inject-fault", "R5"]).status.code(), Some(EXIT_FALSIFIED));
}

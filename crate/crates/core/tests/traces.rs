use arr_core::arr::{
    emit_trace, parse_trace, verify_base_change, verify_theorem_4_1, verify_theorem_4_1_with, ArrOptions, ProofTrace,
    RuleSet, Status, TraceFormat,
};
use arr_core::kexpr::{SymbolTable, VirtualExpr};
use serde_json::Value;

fn table() -> SymbolTable {
    SymbolTable::parse_declarations("line L; bundle E rank 2;").unwrap()
}

fn tampered() -> ProofTrace {
    let target = VirtualExpr::tensor(vec![VirtualExpr::theta(2, VirtualExpr::bundle("Omega_f")), VirtualExpr::line("L")]);
    let opts = ArrOptions { rules: RuleSet::standard().with_r5_target(target), ..ArrOptions::default() };
    verify_theorem_4_1_with(1, 2, &VirtualExpr::line("L"), &table(), &opts).unwrap()
}

/// Checks the documented trace schema by hand.
fn check_schema(v: &Value) {
    assert!(v["goal"]["lhs"].is_string() && v["goal"]["rhs"].is_string());
    assert!(v["params"]["n"].is_u64() && v["params"]["p"].is_u64());
    for s in v["steps"].as_array().expect("steps") {
        for key in ["rule", "anchor", "before", "after"] {
            assert!(s[key].is_string(), "step field {key}");
        }
        for c in s["conditions"].as_array().expect("conditions") {
            assert!(c["name"].is_string() && c["holds"].is_boolean());
        }
    }
    assert!(matches!(v["status"].as_str(), Some("verified") | Some("failed")));
    if let Some(k) = v.get("failed_step") {
        assert!(k.is_u64());
    }
}

#[test]
fn verified_trace_round_trips() {
    let t = verify_theorem_4_1(2, 3, &VirtualExpr::bundle("E"), &table()).unwrap();
    let json = emit_trace(&t, TraceFormat::Json);
    let v: Value = serde_json::from_str(&json).unwrap();
    check_schema(&v);
    assert_eq!(v["status"], "verified");
    assert!(v.get("failed_step").is_none());
    assert_eq!(parse_trace(&json).unwrap(), t);
}

#[test]
fn failed_trace_carries_index_and_residual() {
    let t = tampered();
    assert_eq!(t.status, Status::Failed);
    let json = t.to_json();
    let v: Value = serde_json::from_str(&json).unwrap();
    check_schema(&v);
    assert_eq!(v["status"], "failed");
    let k = v["failed_step"].as_u64().unwrap() as usize;
    assert_eq!(t.steps[k - 1].rule, "R5");
    assert!(!v["residual"].as_str().unwrap().is_empty());
    assert_eq!(parse_trace(&json).unwrap(), t);
}

#[test]
fn text_format_numbers_the_steps() {
    let t = verify_theorem_4_1(1, 2, &VirtualExpr::line("L"), &table()).unwrap();
    let text = emit_trace(&t, TraceFormat::Text);
    let mut from = 0;
    for i in 1..=9 {
        let at = text[from..].find(&format!("({i}) ")).unwrap_or_else(|| panic!("step ({i}) missing:\n{text}"));
        from += at;
    }
    assert!(text.trim_end().ends_with("status: verified"));
    let failed = tampered().to_text();
    assert!(failed.contains("status: failed at step"));
    assert!(failed.contains("residual:"));
}

#[test]
fn base_change_trace_labels_and_round_trip() {
    let t = verify_base_change(1, 2, &VirtualExpr::line("L"), &table()).unwrap();
    assert!(t.is_verified());
    let labels: Vec<&str> = t.steps.iter().filter_map(|s| s.label.as_deref()).collect();
    for want in ["(10)", "(13)", "(1')", "(9')"] {
        assert!(labels.contains(&want), "{labels:?}");
    }
    assert_eq!(parse_trace(&t.to_json()).unwrap(), t);
}

#[test]
fn revalidate_rejects_inconsistent_traces() {
    let t = verify_theorem_4_1(1, 2, &VirtualExpr::line("L"), &table()).unwrap();

    let mut broken = t.clone();
    broken.steps[3].before = broken.steps[0].before.clone();
    assert!(broken.revalidate().is_err());

    let mut lying = t.clone();
    lying.steps[4].conditions[0].holds = false;
    assert!(lying.revalidate().is_err());

    let mut short = t.clone();
    short.steps.truncate(6);
    assert!(short.revalidate().is_err());

    let mut no_index = tampered();
    no_index.failed_step = None;
    assert!(no_index.revalidate().is_err());

    assert!(parse_trace("{\"goal\": 3}").is_err());
}

#[test]
fn every_step_records_its_checks() {
    for n in 1..=3 {
        for p in [2, 3] {
            let t = verify_theorem_4_1(n, p, &VirtualExpr::line("L"), &table()).unwrap();
            for s in &t.steps {
                assert!(!s.conditions.is_empty(), "{} has no checks", s.rule);
                assert!(s.conditions.iter().any(|c| c.name.contains("recomputed")), "{}", s.rule);
            }
        }
    }
}

use std::process::Command;

use ncgeom::report::{Report, Status};
use ncgeom::runner;
use ncgeom::scenario::Scenario;

fn ncgeom(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_ncgeom")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap())
}

#[test]
fn example_one_markdown() {
    let (code, md) = ncgeom(&["example", "--id", "1"]);
    assert_eq!(code, 0, "{md}");
    assert!(md.contains("| R¹₁ = −ħ² + 3ħ³ − 3ħ⁴ + ħ⁵ |"));
    assert!(md.contains("| R₁₂₁₂ = −ħ² + ħ³ |"));
    assert!(md.contains("| g¹¹ = 1 − ħ |"));
    assert!(md.contains("| ricci-equivalence | EXPECTED-FAIL |"));
}

#[test]
fn example_two_json_is_deterministic_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let (code, _) = ncgeom(&["example", "--id", "2", "--format", "json", "--out", p.to_str().unwrap()]);
        assert_eq!(code, 0);
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    let report = Report::from_json(&text).unwrap();
    assert_eq!(report.to_json(), text);
    assert_eq!(report.check("chiral-parity").unwrap().status, Status::ExpectedFail);
    assert_eq!(report.check("ricci-relations").unwrap().status, Status::ExpectedFail);
    let r = report.quantity("R¹₁").unwrap();
    assert_eq!(r.rendered(), "R¹₁ = −3/4·ħ² − 1/4·ħ³ − 9/4·ħ⁴ − 3/4·ħ⁵ − 9/4·ħ⁶");
}

#[test]
fn non_skew_theta_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(
        &path,
        r#"{"name": "bad", "chart": {"dim": 2}, "truncation": 1,
            "theta": {"matrix": [["1", "0"], ["0", "0"]]}, "checks": []}"#,
    )
    .unwrap();
    let (code, _) = ncgeom(&["run", path.to_str().unwrap()]);
    assert_eq!(code, 2);
    let (code, _) = ncgeom(&["run", "builtin:no-such-scenario"]);
    assert_eq!(code, 2);
    let (code, _) = ncgeom(&["example", "--id", "3"]);
    assert_eq!(code, 2);
}

#[test]
fn failing_check_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fail.json");
    // Example 1 data without the EXPECTED-fail annotation.
    let mut s = Scenario::builtin("example-1").unwrap();
    s.checks = vec![ncgeom::scenario::CheckSpec::Id("ricci-relations".into())];
    s.expected.clear();
    std::fs::write(&path, serde_json::to_string(&s).unwrap()).unwrap();
    let (code, md) = ncgeom(&["run", path.to_str().unwrap()]);
    assert_eq!(code, 1, "{md}");
    assert!(md.contains("| ricci-relations | FAIL |"));
}

#[test]
fn empty_check_list() {
    let s = Scenario::from_json(r#"{"name": "empty", "chart": {"dim": 2}, "truncation": 2}"#).unwrap();
    let report = runner::run(&s).unwrap();
    assert!(report.checks.is_empty());
    assert_eq!(report.exit_code(), 0);
}

#[test]
fn verify_appendix_and_listing() {
    let (code, md) = ncgeom(&["verify-appendix", "--order", "0", "--points", "2"]);
    assert_eq!(code, 0);
    assert_eq!(md.matches("| PASS |").count(), 16);
    let (code, out) = ncgeom(&["list-checks"]);
    assert_eq!(code, 0);
    for id in ["ricci-equivalence", "quasi-canonical", "appendix", "spherical-theorem"] {
        assert!(out.contains(id));
    }
}

#[test]
fn expected_value_mismatch_is_located() {
    let mut s = Scenario::builtin("example-1").unwrap();
    s.checks = vec![ncgeom::scenario::CheckSpec::Id("expected-values".into())];
    let e = s.expected.iter_mut().find(|e| e.quantity == "ricci_up").unwrap();
    e.series[4] = ncgeom::rational::int(3);
    let report = runner::run(&s).unwrap();
    let c = report.check("expected-values").unwrap();
    assert_eq!(c.status, Status::Fail);
    assert_eq!(c.counterexample.as_ref().unwrap()["order"], 4);
}

#[test]
fn general_star_runs_the_quasi_pipeline() {
    let s = Scenario::from_json(
        r#"{
        "name": "standard-ordered sphere",
        "chart": {"dim": 2, "coordinates": ["t", "p"]},
        "truncation": 3,
        "base_point": [{"sin": "3/5", "cos": "4/5"}, {"sin": "5/13", "cos": "12/13"}],
        "star": {"exponential": {"matrix": [["0", "1"], ["0", "0"]], "orders": 3}},
        "metric": {"embedding": {"components": ["sin(t)*cos(p)", "sin(t)*sin(p)", "cos(t)"]}},
        "checks": ["quasi-torsion-free", "quasi-first-bianchi", "quasi-decomposition", "quasi-canonical"],
        "seed": 5
    }"#,
    )
    .unwrap();
    let report = runner::run(&s).unwrap();
    assert!(report.ok(), "{}", report.to_markdown());
    assert_eq!(report.check("quasi-canonical").unwrap().status, Status::Skipped);
}

#[test]
fn non_associative_table_is_rejected() {
    // B₁ of the Moyal product alone.
    let s = Scenario::from_json(
        r#"{
        "name": "truncated",
        "chart": {"dim": 2},
        "truncation": 2,
        "base_point": ["1/2", "1/3"],
        "star": {"general": [[{"coeff": "1", "left": [1, 0], "right": [0, 1]},
                              {"coeff": "-1", "left": [0, 1], "right": [1, 0]}]]},
        "metric": {"embedding": {"components": ["x1", "x2", "x1*x2"]}},
        "checks": ["quasi-torsion-free"]
    }"#,
    )
    .unwrap();
    let report = runner::run(&s).unwrap();
    let c = report.check("quasi-torsion-free").unwrap();
    assert_eq!(c.status, Status::Fail);
    assert!(c.details.contains("not associative"), "{}", c.details);
}

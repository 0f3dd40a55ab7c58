use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(format!("{name}.json"))
}

fn mgplan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mgplan")).args(args).output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn run_plan(case: &str, dir: &Path, extra: &[&str]) -> Output {
    let f = fixture(case);
    let mut args = vec!["plan", s(&f), "--out-dir", s(dir)];
    args.extend_from_slice(extra);
    mgplan(&args)
}

fn run_robust(case: &str, dir: &Path, extra: &[&str]) -> Output {
    let f = fixture(case);
    let mut args = vec!["robust", s(&f), "--out-dir", s(dir)];
    args.extend_from_slice(extra);
    mgplan(&args)
}

#[test]
fn plan_writes_summary_rows_and_versioned_plan() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_plan("triangle", dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    for row in ["OPEX", "CAPEX", "Total cost", "Scenarios", "Iterations", "Wall time"] {
        assert!(summary.contains(row), "missing {row}");
    }
    let doc = json(&dir.path().join("plan.json"));
    assert_eq!(doc["schema"], "mgplan.plan/1");
    assert!(doc["objective"].as_f64().unwrap() > 0.0);
}

#[test]
fn tighter_cone_accuracy_does_not_lower_the_objective() {
    let loose = tempfile::tempdir().unwrap();
    let tight = tempfile::tempdir().unwrap();
    assert_eq!(run_plan("chain", loose.path(), &["--btn-accuracy", "1e-2"]).status.code(), Some(0));
    assert_eq!(run_plan("chain", tight.path(), &["--btn-accuracy", "1e-4"]).status.code(), Some(0));
    let a = json(&loose.path().join("plan.json"))["objective"].as_f64().unwrap();
    let b = json(&tight.path().join("plan.json"))["objective"].as_f64().unwrap();
    assert!(b >= a * (1.0 - 1e-9), "{b} < {a}");
}

#[test]
fn malformed_case_exits_2_with_field_path() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    let mut doc = json(&fixture("pair"));
    doc["electrical"]["s_rating"] = Value::String("large".into());
    fs::write(&bad, doc.to_string()).unwrap();
    let out = mgplan(&["plan", s(&bad), "--out-dir", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("electrical.s_rating"), "{err}");
}

#[test]
fn degenerate_box_reproduces_plan_artifacts() {
    let p = tempfile::tempdir().unwrap();
    let r = tempfile::tempdir().unwrap();
    assert_eq!(run_plan("square", p.path(), &[]).status.code(), Some(0));
    assert_eq!(run_robust("square", r.path(), &["--load-lb", "1", "--load-ub", "1"]).status.code(), Some(0));
    let a = fs::read(p.path().join("plan.json")).unwrap();
    let b = fs::read(r.path().join("plan.json")).unwrap();
    assert_eq!(a, b);
    assert_eq!(json(&r.path().join("robust.json"))["audit"].as_array().unwrap().len(), 1);
}

#[test]
fn robust_total_is_at_least_the_deterministic_total() {
    for case in ["pair", "chain"] {
        let p = tempfile::tempdir().unwrap();
        let r = tempfile::tempdir().unwrap();
        assert_eq!(run_plan(case, p.path(), &[]).status.code(), Some(0));
        assert_eq!(run_robust(case, r.path(), &["--load-lb", "0.5", "--load-ub", "1.5"]).status.code(), Some(0));
        let det = json(&p.path().join("plan.json"))["objective"].as_f64().unwrap();
        let rob = json(&r.path().join("plan.json"))["objective"].as_f64().unwrap();
        assert!(rob > det, "{case}: {rob} <= {det}");
    }
}

#[test]
fn robust_artifacts_are_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [a.path(), b.path()] {
        assert_eq!(run_robust("pair", d, &["--load-lb", "0.5", "--load-ub", "1.5"]).status.code(), Some(0));
    }
    for name in ["plan.json", "robust.json", "scenarios.jsonl"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
    let doc = json(&a.path().join("robust.json"));
    assert_eq!(doc["schema"], "mgplan.robust/1");
    assert_eq!(doc["status"], "converged");
}

#[test]
fn iteration_cap_exits_3_with_partial_audit() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_robust("pair", dir.path(), &["--load-lb", "0.5", "--load-ub", "1.5", "--max-iterations", "1"]);
    assert_eq!(out.status.code(), Some(3));
    let doc = json(&dir.path().join("robust.json"));
    assert_eq!(doc["status"], "iteration_cap");
    assert_eq!(doc["audit"].as_array().unwrap().len(), 1);
}

#[test]
fn restored_scenarios_converge_immediately() {
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    assert_eq!(run_robust("pair", first.path(), &["--load-lb", "0.5", "--load-ub", "1.5"]).status.code(), Some(0));
    let dump = first.path().join("scenarios.jsonl");
    let out = run_robust("pair", second.path(), &["--load-lb", "0.5", "--load-ub", "1.5", "--restore", s(&dump)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&second.path().join("robust.json"))["audit"].as_array().unwrap().len(), 1);
    assert_eq!(fs::read(first.path().join("plan.json")).unwrap(), fs::read(second.path().join("plan.json")).unwrap());
}

#[test]
fn check_accepts_own_plan_and_flags_unprotected_scenarios() {
    let det = tempfile::tempdir().unwrap();
    let rob = tempfile::tempdir().unwrap();
    let case = fixture("pair");
    assert_eq!(run_plan("pair", det.path(), &[]).status.code(), Some(0));
    assert_eq!(run_robust("pair", rob.path(), &["--load-lb", "0.5", "--load-ub", "1.5"]).status.code(), Some(0));
    let det_plan = det.path().join("plan.json");

    let own = mgplan(&["check", s(&case), s(&det_plan)]);
    assert_eq!(own.status.code(), Some(0), "{}", String::from_utf8_lossy(&own.stdout));

    let dump = rob.path().join("scenarios.jsonl");
    let out = mgplan(&["check", s(&case), s(&det_plan), s(&dump)]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8_lossy(&out.stdout);
    let unserved: Vec<f64> = text
        .lines()
        .filter_map(|l| l.trim().strip_prefix("unserved_load"))
        .map(|v| v.trim().parse().unwrap())
        .collect();
    assert!(unserved.iter().any(|&v| v > 1e-6), "{text}");

    let robust_plan = rob.path().join("plan.json");
    assert_eq!(mgplan(&["check", s(&case), s(&robust_plan), s(&dump)]).status.code(), Some(0));
}

#[test]
fn truncated_plan_file_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run_plan("pair", dir.path(), &[]).status.code(), Some(0));
    let plan = dir.path().join("plan.json");
    let text = fs::read_to_string(&plan).unwrap();
    let cut = dir.path().join("cut.json");
    fs::write(&cut, &text[..text.len() / 2]).unwrap();
    let out = mgplan(&["check", s(&fixture("pair")), s(&cut)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn scenario_shape_mismatch_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run_plan("pair", dir.path(), &[]).status.code(), Some(0));
    let sc = dir.path().join("scenario.json");
    fs::write(&sc, r#"{"p_load": [[1.0]], "q_load": [[0.0]], "origin": "deterministic", "fingerprint": "x"}"#).unwrap();
    let out = mgplan(&["check", s(&fixture("pair")), s(&dir.path().join("plan.json")), s(&sc)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn chance_box_feeds_the_robust_command() {
    let dir = tempfile::tempdir().unwrap();
    let f = fixture("growth");
    let out = mgplan(&["chance-box", s(&f), "--epsilon", "0.05", "--samples", "20000", "--seed", "3", "--out-dir", s(dir.path())]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&dir.path().join("box.json"));
    assert_eq!(doc["schema"], "mgplan.box/1");
    assert!((doc["joint_mass"].as_f64().unwrap() - 0.95).abs() < 1e-9);

    let out = mgplan(&["robust", s(&fixture("pair")), "--epsilon", "0.1", "--out-dir", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2), "pair has no uncertainty section");
    let out = mgplan(&["robust", s(&f), "--epsilon", "0.1", "--out-dir", s(dir.path())]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&dir.path().join("robust.json"))["source"]["kind"], "chance");
}

#[test]
fn bad_flags_are_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run_plan("pair", dir.path(), &["--backend", "simplex9"]).status.code(), Some(2));
    assert_eq!(run_plan("pair", dir.path(), &["--btn-accuracy", "2"]).status.code(), Some(2));
    assert_eq!(run_robust("pair", dir.path(), &["--load-lb", "1.2", "--load-ub", "1.5"]).status.code(), Some(2));
    assert_eq!(run_robust("pair", dir.path(), &[]).status.code(), Some(2));
}

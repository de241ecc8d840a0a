use std::path::PathBuf;

use qmulti::{parse_scenario, run_scenario, ParseError, Report, Status};
use serde_json::{json, Value};

fn scenario_file(name: &str) -> String {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "scenarios", name].iter().collect();
    std::fs::read_to_string(path).unwrap()
}

fn run(text: &str) -> Report {
    run_scenario(&parse_scenario(text, None).unwrap(), false)
}

fn diagonal_doc(tasks: Value) -> String {
    json!({
        "observables": {
            "A": { "dim": 2, "axes": [["0", "1"]], "effects": {
                "0": [[0.75, 0], [0, 0.25]], "1": [[0.25, 0], [0, 0.75]] } }
        },
        "states": { "ground": [[1, 0], [0, 0]] },
        "tasks": tasks
    })
    .to_string()
}

#[test]
fn validate_task_on_valid_observable_passes() {
    let r = run(&diagonal_doc(json!([{ "name": "v", "kind": "validate", "args": { "target": "A" } }])));
    assert_eq!(r.tasks[0].status, Status::Pass);
    assert_eq!(r.exit_code(), 0);
}

#[test]
fn distribution_of_diagonal_example() {
    let r = run(&diagonal_doc(json!([{
        "name": "d", "kind": "distribution", "args": { "source": "A", "state": "ground" },
        "expected": { "value": { "0": 0.75, "1": 0.25 } }
    }])));
    assert_eq!(r.tasks[0].status, Status::Pass);
    assert!(r.tasks[0].deviation.unwrap() <= 1e-9);
    assert_eq!(r.tasks[0].value, json!({ "0": 0.75, "1": 0.25 }));
}

#[test]
fn expected_value_decides_status() {
    let r = run(&diagonal_doc(json!([
        { "name": "off", "kind": "distribution", "args": { "source": "A", "state": "ground" },
          "expected": { "value": { "0": 0.7, "1": 0.3 } } },
        { "name": "loose", "kind": "distribution", "args": { "source": "A", "state": "ground" },
          "expected": { "value": { "0": 0.7, "1": 0.3 }, "tol": 0.06 } }
    ])));
    assert_eq!(r.tasks[0].status, Status::Fail);
    assert!((r.tasks[0].deviation.unwrap() - 0.05).abs() < 1e-12);
    assert_eq!(r.tasks[1].status, Status::Pass);
    assert_eq!(r.exit_code(), 1);
}

#[test]
fn noncommuting_luders_product_fails_verify_joint() {
    let r = run(&scenario_file("failing_joint.json"));
    assert_eq!(r.exit_code(), 1);
    let v = &r.tasks[1];
    assert_eq!(v.status, Status::Fail);
    // X-marginal is exact; the Z-marginal is the X-basis pinching of Z, I/2
    let devs = v.value["deviations"].as_array().unwrap();
    assert!(devs[0].as_f64().unwrap() < 1e-12);
    assert!((devs[1].as_f64().unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn broken_observable_fails_to_parse_with_location() {
    match parse_scenario(&scenario_file("broken_observable.json"), None) {
        Err(ParseError::Invalid { location, message }) => {
            assert_eq!(location, "observables.broken");
            assert!(message.contains("1.5"), "{message}");
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn checked_in_scenario_passes_every_task() {
    let r = run(&scenario_file("all_tasks.json"));
    for t in &r.tasks {
        assert_eq!(t.status, Status::Pass, "{}: {:?}", t.name, t.detail);
    }
    let kinds: std::collections::BTreeSet<&str> = r.tasks.iter().map(|t| t.kind.as_str()).collect();
    assert_eq!(kinds.len(), 15, "{kinds:?}");
}

#[test]
fn reports_are_deterministic_and_parallel_safe() {
    let s = parse_scenario(&scenario_file("all_tasks.json"), None).unwrap();
    let a = serde_json::to_string(&run_scenario(&s, false).to_json(false)).unwrap();
    let b = serde_json::to_string(&run_scenario(&s, false).to_json(false)).unwrap();
    let c = serde_json::to_string(&run_scenario(&s, true).to_json(false)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a, c);
}

#[test]
fn runtime_mismatch_is_a_task_error() {
    let r = run(&diagonal_doc(json!([
        { "name": "bad axis", "kind": "marginal", "args": { "source": "A", "axis": 3 }, "bind": "M" },
        { "name": "reads M", "kind": "validate", "args": { "target": "M" } },
        { "name": "still runs", "kind": "validate", "args": { "target": "A" } }
    ])));
    let status: Vec<Status> = r.tasks.iter().map(|t| t.status).collect();
    assert_eq!(status, vec![Status::Error, Status::Fail, Status::Pass]);
    assert!(r.tasks[1].detail.as_deref().unwrap().contains("unavailable"));
}

#[test]
fn inline_literals_are_accepted() {
    let r = run(&diagonal_doc(json!([{
        "name": "inline", "kind": "luders",
        "args": { "source": { "dim": 2, "axes": [["y", "n"]], "effects": {
            "y": [[1, 0], [0, 0]], "n": [[0, 0], [0, 1]] } } },
        "expected": { "value": {
            "space": [["y", "n"]], "in_dim": 2, "out_dim": 2,
            "operations": { "y": [[[1, 0], [0, 0]]], "n": [[[0, 0], [0, 1]]] } } }
    }])));
    assert_eq!(r.tasks[0].status, Status::Pass, "{:?}", r.tasks[0].detail);
}

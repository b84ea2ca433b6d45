use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

fn netclear(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netclear")).args(args).output().expect("binary runs")
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

fn payment(doc: &Value, from: &str, to: &str) -> String {
    doc["payments"]
        .as_array()
        .unwrap()
        .iter()
        .find(|e| e["from"] == from && e["to"] == to)
        .map(|e| e["amount"].as_str().unwrap().to_string())
        .expect("payment listed")
}

#[test]
fn check_valid_market() {
    let out = netclear(&["check", "--market", arg(&fixture("ring3.json"))]);
    assert_eq!(out.status.code(), Some(0));
    let doc = stdout_json(&out);
    assert_eq!(doc["valid"], true);
    assert_eq!(doc["banks"], 3);
}

#[test]
fn check_invalid_market_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"banks": ["a", "b"], "endowments": ["0", "0"], "alpha": ["2", "1"], "beta": ["1", "1"],
            "liabilities": [{"from": "a", "to": "b", "amount": "1"}]}"#,
    )
    .unwrap();
    let out = netclear(&["check", "--market", arg(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn missing_file_exits_2() {
    let out = netclear(&["clear", "--market", "/nonexistent/market.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn clear_priority_writes_payments() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("p.json");
    let out = netclear(&["clear", "--model", "priority", "--market", arg(&fixture("prio.json")), "--out", arg(&p)]);
    assert_eq!(out.status.code(), Some(0));
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&p).unwrap()).unwrap();
    assert_eq!(payment(&doc, "1", "2"), "1");
    assert_eq!(payment(&doc, "1", "3"), "0");
}

#[test]
fn clear_trace_lists_rounds() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.json");
    let out = netclear(&["clear", "--market", arg(&fixture("prio.json")), "--trace", arg(&trace)]);
    assert_eq!(out.status.code(), Some(0));
    let rounds: Value = serde_json::from_str(&std::fs::read_to_string(&trace).unwrap()).unwrap();
    assert!(rounds.as_array().unwrap().len() >= 2);
}

#[test]
fn save_all_but_one_none_exits_3() {
    let out = netclear(&["compress", "save-all-but-one", "--market", arg(&fixture("twochains.json"))]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stdout_json(&out)["verdict"], "none");
}

#[test]
fn optimal_and_greedy_on_twocycle() {
    let out = netclear(&["compress", "optimal", "--market", arg(&fixture("twocycle.json"))]);
    assert_eq!(out.status.code(), Some(0));
    let doc = stdout_json(&out);
    assert_eq!(doc["status"], "optimal");
    assert_eq!(doc["objective"], 1);
    let out = netclear(&["compress", "greedy", "--market", arg(&fixture("twocycle.json"))]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["defaulting"].as_array().unwrap().len(), 1);
}

#[test]
fn optimal_budget_exits_4() {
    let out = netclear(&["compress", "optimal", "--market", arg(&fixture("asym.json")), "--step-limit", "1"]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(stdout_json(&out)["status"], "budget-exceeded");
}

#[test]
fn bad_scale_exits_2() {
    let out = netclear(&["compress", "optimal", "--market", arg(&fixture("asym.json")), "--scale", "zero"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn generated_market_checks() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.json");
    let out = netclear(&["gen", "er", "--n", "6", "--seed", "4", "--out", arg(&m)]);
    assert_eq!(out.status.code(), Some(0));
    let again = netclear(&["gen", "er", "--n", "6", "--seed", "4"]);
    assert_eq!(std::fs::read(&m).unwrap(), again.stdout);
    let out = netclear(&["check", "--market", arg(&m)]);
    assert_eq!(stdout_json(&out)["banks"], 6);
}

#[test]
fn partition_gadget_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let params = dir.path().join("params.json");
    std::fs::write(&params, r#"{"values": [1, 1]}"#).unwrap();
    let m = dir.path().join("gadget.json");
    let out = netclear(&["gen", "gadget", "--kind", "partition", "--params", arg(&params), "--out", arg(&m)]);
    assert_eq!(out.status.code(), Some(0));
    let meta = stdout_json(&out);
    assert_eq!(meta["banks"], 12);
    assert_eq!(meta["threshold"], 9);
    assert_eq!(meta["distinguished"], "b'");
    let out = netclear(&["gen", "gadget", "--kind", "max2sat", "--params", arg(&params)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    let template = synthetic_template();
    std::fs::write(
        &config,
        format!(r#"{{"sizes": [4, 5], "instances_per_size": 2, "template": {template}, "milp_node_limit": 500}}"#),
    )
    .unwrap();
    let out_dir = dir.path().join("report");
    let out = netclear(&["simulate", "--config", arg(&config), "--out", arg(&out_dir)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = std::fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    assert!(summary.starts_with("size,method,mean_defaults,ci_lo,ci_hi"));
    let rows = std::fs::read_to_string(out_dir.join("instances.jsonl")).unwrap();
    assert_eq!(rows.lines().count(), 4);
    assert_eq!(String::from_utf8_lossy(&out.stderr).lines().count(), 4);
}

/// Generator settings of the synthetic experiment.
fn synthetic_template() -> String {
    r#"{"n": 0, "p": 0.2, "liabilities": {"uniform": {"lo": 100.0, "hi": 1000.0}},
        "endowments": {"uniform-fraction": {"frac": 0.8}}, "alpha": [0.4, 0.8], "beta": [0.6, 0.9], "seed": 3}"#
        .to_string()
}

use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn demo(name: &str, extra: &[&str]) -> (Vec<u8>, i32) {
    let out = Command::new(env!("CARGO_BIN_EXE_branchop"))
        .args(["demo", name, "--json"])
        .args(extra)
        .output()
        .unwrap();
    (out.stdout, out.status.code().unwrap())
}

fn golden(name: &str) -> Vec<u8> {
    std::fs::read(Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("tests/golden/demo-{name}.json"))).unwrap()
}

#[test]
fn demos_match_golden_output() {
    for (name, code) in [("r2", 0), ("r3", 0), ("witness", 1)] {
        let (out, got) = demo(name, &[]);
        assert_eq!(got, code, "{name}");
        assert!(out == golden(name), "demo {name} drifted:\n{}", String::from_utf8_lossy(&out));
    }
}

#[test]
fn r2_worked_matrices() {
    let v: Value = serde_json::from_slice(&demo("r2", &[]).0).unwrap();
    assert_eq!(v["oper"], "[[0,0],[z,0]]");
    assert_eq!(v["log_connection"], "[[0,0],[1,1/z]]");
    assert_eq!(v["residue"], "[[0,0],[0,1]]");
    assert_eq!(v["trace_form"], "1/z");
    assert_eq!(v["phi"], "[[0,1],[-z,0]]");
    assert_eq!(v["phi_det"], "z");
    assert_eq!(v["hecke_chain"]["initial_twist"], "[[-1/z,0],[1,0]]");
    assert_eq!(v["hecke_chain"]["final_residue"], "[[0,0],[0,0]]");
    assert_eq!(v["roundtrip"]["holds"], true);
    assert_eq!(v["dual"], "[[0,0],[z,0]]");
    let flat: Vec<&str> = v["flat_sections"].as_array().unwrap().iter().map(|s| s.as_str().unwrap()).collect();
    assert!(flat.contains(&"[1,-1/2*z]") && flat.contains(&"[0,1/z]"));
}

#[test]
fn r3_worked_matrices() {
    let v: Value = serde_json::from_slice(&demo("r3", &[]).0).unwrap();
    assert_eq!(v["oper"], "[[0,0,0],[z,0,0],[0,z,0]]");
    assert_eq!(v["log_connection"], "[[0,0,0],[1,1/z,0],[0,1,2/z]]");
    assert_eq!(v["residue"], "[[0,0,0],[0,1,0],[0,0,2]]");
    assert_eq!(v["trace_form"], "3/z");
    assert_eq!(v["roundtrip"]["oper"], "[[0,1,z],[z,0,0],[0,z,0]]");
    assert_eq!(v["roundtrip"]["holds"], true);
}

#[test]
fn witness_worked_matrices() {
    let v: Value = serde_json::from_slice(&demo("witness", &[]).0).unwrap();
    assert_eq!(v["candidate"], "[[0,1/z],[1,1/z]]");
    assert_eq!(v["residue"], "[[0,1],[0,1]]");
    assert_eq!(v["log_conditions"]["passed"], true);
    assert_eq!(v["obstruction"]["M_2"], "-1");
    let chain = &v["hecke_chain"];
    assert_eq!(chain["initial_twist"], "[[-1/z,1/z],[1,0]]");
    assert_eq!(chain["steps"][0]["basis"], "[[1,z],[1,0]]");
    assert_eq!(chain["final_residue"], "[[0,0],[-1,0]]");
    assert_eq!(v["flat_dimension"], 1);
}

#[test]
fn printed_scenarios_parse_back() {
    let out = Command::new(env!("CARGO_BIN_EXE_branchop")).args(["demo", "r2", "--print-scenario"]).output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("[oper]") && text.contains("gamma = z"));
}

#[test]
fn precision_flag_moves_the_window() {
    let v: Value = serde_json::from_slice(&demo("r2", &["--precision", "12"]).0).unwrap();
    assert_eq!(v["precision"]["requested"], 12);
    assert_eq!(v["precision"]["guaranteed_below"], 10);
    assert_eq!(v["log_connection"], "[[0,0],[1,1/z]]");
}

#[test]
fn witness_names_its_obstruction() {
    let out = Command::new(env!("CARGO_BIN_EXE_branchop")).args(["demo", "witness"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(String::from_utf8(out.stderr).unwrap().trim(), "demo witness: M_2 = -1");
}

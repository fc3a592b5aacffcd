use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_symcsp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_lines(out: &Output) -> Vec<Value> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(|l| serde_json::from_str(l).expect("JSON line"))
        .collect()
}

fn ok(args: &[&str]) -> Value {
    let out = run(args);
    assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stdout));
    json_lines(&out).remove(0)
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn classify_or() {
    let out = run(&["classify", "[0,1,1]"]);
    assert_eq!(out.status.code(), Some(0));
    let lines = json_lines(&out);
    assert_eq!(lines[0]["labels"], serde_json::json!(["OR"]));
    assert_eq!(lines.last().unwrap()["verdict"], "sharp-p-hard");
    let lines = json_lines(&run(&["classify", "[1,0]", "[1,0,0,1]"]));
    assert_eq!(lines.last().unwrap()["verdict"], "polynomial-time");
}

#[test]
fn eval_empty_frame() {
    let frame = r#"{"variables":["a","b"],"applications":[],"constraints":{}}"#;
    assert_eq!(ok(&["eval", frame])["value"], "4");
    let out = run(&["--max-vars", "1", "eval", frame]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json_lines(&out)[0]["error"], "enumeration-cap");
}

#[test]
fn hardness_chain_file_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let chain = dir.path().join("chain.json");
    let v = ok(&["hardness", "[1,1,1,-1]", "--i0", "0", "--chain-out", path(&chain)]);
    assert_eq!(v["constraint"]["values"], serde_json::json!(["4", "2", "4"]));
    let report = ok(&["verify", path(&chain), "--target", "[4,2,4]"]);
    assert_eq!(report["ok"], true);
    assert_eq!(report["target_matches"], true);
    let out = run(&["verify", path(&chain), "--target", "[4,2,5]"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn emitted_chains_verify() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["derive-delta", "[1,2,-1]", "--out-dir", path(dir.path())]);
    for i in 0..2 {
        let file = dir.path().join(format!("delta{i}.json"));
        assert_eq!(ok(&["verify", path(&file), "--m-range", "1:30"])["ok"], true);
    }
    let pair = dir.path().join("pair.json");
    ok(&["pair-hardness", "[1,2]", "[1,1,-1]", "--i0", "1", "--chain-out", path(&pair)]);
    assert_eq!(ok(&["verify", path(&pair)])["ok"], true);
    let red = dir.path().join("red.json");
    ok(&["reduce-arity", "[0,1,1,-1]", "--chain-out", path(&red)]);
    assert_eq!(ok(&["verify", path(&red)])["ok"], true);
}

#[test]
fn corrupted_chain_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("c.json");
    ok(&["reduce-arity", "[0,1,1,-1]", "--chain-out", path(&file)]);
    let mut chain: Value = serde_json::from_str(&std::fs::read_to_string(&file).unwrap()).unwrap();
    chain["steps"][0]["scalar"] = Value::from("3");
    std::fs::write(&file, chain.to_string()).unwrap();
    let out = run(&["verify", path(&file)]);
    assert_eq!(out.status.code(), Some(2));
    let report = &json_lines(&out)[0];
    assert_eq!(report["ok"], false);
    assert_eq!(report["steps"][0]["ok"], false);
}

#[test]
fn malformed_and_precondition_exit_one() {
    let out = run(&["classify", "{oops"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json_lines(&out)[0]["error"], "malformed");
    let out = run(&["hardness", "[1,0,1]", "--i0", "0"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json_lines(&out)[0]["error"], "precondition");
}

#[test]
fn op_and_eliminate() {
    assert_eq!(ok(&["op", "marginalize", "[1,2,3]"])["values"], serde_json::json!(["3", "5"]));
    assert_eq!(ok(&["op", "pin", "[1,2,3]", "--bit", "1"])["values"], serde_json::json!(["2", "3"]));
    assert_eq!(ok(&["op", "power", "[1,-2]", "--exponent", "3"])["values"], serde_json::json!(["1", "-8"]));
    let frame = r#"{"variables":["a","b"],
        "applications":[{"constraint":"d","scope":["a"]},{"constraint":"h","scope":["a","b"]}],
        "constraints":{"d":{"arity":1,"symmetric":true,"values":["1","0"]},
                       "h":{"arity":2,"symmetric":true,"values":["1","2","1"]}}}"#;
    let v = ok(&["eliminate-delta", frame]);
    assert_eq!(v["scale"], "1/2");
    assert_eq!(ok(&["eval", &v["frame"].to_string()])["value"], "6");
}

#[test]
fn ap_run_is_seeded() {
    let frame = r#"{"variables":["a","b"],
        "applications":[{"constraint":"d","scope":["a"]},{"constraint":"h","scope":["a","b"]}],
        "constraints":{"d":{"arity":1,"symmetric":true,"values":["1","0"]},
                       "h":{"arity":2,"symmetric":true,"values":["1","2","3"]}}}"#;
    let args = ["--seed", "9", "ap-run", frame, "--target", "d", "--oracle", "random-legal", "--trials", "3"];
    let a = ok(&args);
    assert_eq!(a, ok(&args));
    assert_eq!(a["truth"], "3");
    assert!(a["trials"].as_array().unwrap().iter().all(|t| t["within"] == true));
}

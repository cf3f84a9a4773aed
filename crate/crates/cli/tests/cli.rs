use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
        .display()
        .to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sabotage"))
        .args(args)
        .env("RUST_LOG", "off")
        .output()
        .expect("binary runs")
}

fn check(graph: &str, extra: &[&str]) -> (i32, Value) {
    let g = fixture(graph);
    let mut args = vec!["check", "--graph", g.as_str()];
    args.extend_from_slice(extra);
    let out = run(&args);
    let code = out.status.code().unwrap();
    let text = if code == 2 { &out.stderr } else { &out.stdout };
    (code, serde_json::from_slice(text).expect("json output"))
}

#[test]
fn escape_example_holds_with_oracle_agreement() {
    let (code, v) = check("escape.json", &["--formula", "<<d>> F[<=6] (<<>> G !g)", "--oracle"]);
    assert_eq!(code, 0);
    assert_eq!(v["verdict"], true);
    assert_eq!(v["oracle"]["agrees"], true);
}

#[test]
fn single_edge_goal_is_unreachable_for_the_concurrent_grand_coalition() {
    // The demon may cancel the only edge forever.
    let (code, v) = check("single_edge.json", &["--kind", "con", "--formula", "<<r>> F g"]);
    assert_eq!(code, 1);
    assert_eq!(v["verdict"], false);
}

#[test]
fn knowledge_fails_under_local_degree_uncertainty() {
    let (code, _) = check(
        "chain.json",
        &[
            "--formula",
            "K{r} <<r>> F g",
            "--relations",
            r#"{"r":"local_degree"}"#,
            "--state",
            "((E,u),r)",
        ],
    );
    assert_eq!(code, 1);
}

#[test]
fn concurrent_play_can_run_forever() {
    let (code, v) = check("triangle.json", &["--kind", "con", "--formula", "<<r,d>> G X T"]);
    assert_eq!(code, 0);
    assert!(v["witness"].is_array());
}

#[test]
fn sml_formulas_evaluate_at_the_runner() {
    let (code, v) = check("triangle.json", &["--sml", "--formula", "<>g"]);
    assert_eq!((code, v["logic"].as_str()), (0, Some("sml")));
    // Deleting one edge out of 0 still leaves the other.
    let (code, _) = check("triangle.json", &["--sml", "--formula", "[#] <> T"]);
    assert_eq!(code, 0);
    let (code, _) = check("triangle.json", &["--sml", "--formula", "[#] <> g"]);
    assert_eq!(code, 1);
}

#[test]
fn bad_input_exits_with_code_two_and_json_error() {
    let (code, v) = check("triangle.json", &["--formula", "<<q>> F g"]);
    assert_eq!(code, 2);
    assert_eq!(v["error"], "bad_request");
    let (code, v) = check("triangle.json", &["--formula", "<<r>> F (g"]);
    assert_eq!(code, 2);
    assert_eq!(v["error"], "bad_request");
    let out = run(&["check", "--graph", "/nonexistent.json", "--formula", "T"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn solve_prints_a_strategy() {
    let g = fixture("escape.json");
    let out = run(&["solve", "--graph", &g, "--formula", "<<d>> G !g"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let strategy = v["strategy"].as_array().unwrap();
    assert!(!strategy.is_empty());
    assert!(strategy.iter().all(|row| row["agent"] == "d"));
}

#[test]
fn mincut_reports_static_and_dynamic_cuts() {
    let g = fixture("escape.json");
    let out = run(&["mincut", "--graph", &g, "--from", "s", "--to", "t"]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["size"], 2);
    let out = run(&["mincut", "--graph", &g, "--from", "s", "--to", "t", "--dynamic"]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["demon_moves"], 3);
    let g = fixture("single_edge.json");
    let out = run(&["mincut", "--graph", &g, "--from", "v0", "--to", "vg", "--dynamic"]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["demon_moves"].is_null());
    let out = run(&["mincut", "--graph", &g, "--from", "v0", "--to", "v0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn scripted_play_session() {
    let g = fixture("triangle.json");
    let mut child = Command::new(env!("CARGO_BIN_EXE_sabotage"))
        .args(["play", "--graph", &g, "--kind", "con", "--seed", "3"])
        .env("RUST_LOG", "off")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(b"moves\n0 1\nhint\n9 9\nquit\n")
        .unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains(r#""moves":{"r":[["0","1"],["0","2"]]}"#), "{text}");
    assert!(text.contains("state ({(0,1),(1,2)},1)"), "{text}");
    assert!(text.contains(r#""formula":"<<r>> F g""#), "{text}");
    assert!(text.contains(r#""error":"bad_request""#), "{text}");
}

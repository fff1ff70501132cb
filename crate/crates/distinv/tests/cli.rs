//! The `distinv` binary end to end: exit codes, files and reports.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_distinv");

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn fixture(name: &str) -> String {
    root().join("fixtures").join(name).display().to_string()
}

fn cert(name: &str) -> String {
    fixture(&format!("certificates/{name}.cert.json"))
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf-8")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("JSON report")
}

#[test]
fn check_accepts_the_chain_certificate() {
    let o = run(&["check", &fixture("chain.json"), &cert("chain")]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
}

#[test]
fn check_rejects_the_weak_certificate_with_a_witness() {
    let o = run(&["check", "@running", &cert("running-ex1-weak"), "--json"]);
    assert_eq!(code(&o), 1);
    let r = json(&o);
    assert_eq!(r["overall"], "fail");
    assert_eq!(r["inductive"]["verdict"], "fail");
    assert_eq!(r["containment"]["verdict"], "pass");
    assert_eq!(r["inductive"]["witness"]["A"], "3/4");
    assert_eq!(r["inductive"]["witness"]["B"], "0");
    assert_eq!(r["inductive"]["witness"]["C"], "1/4");
}

#[test]
fn malformed_inputs_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"invariant\": [").unwrap();
    let bad = bad.display().to_string();
    assert_eq!(code(&run(&["check", "@chain", &bad])), 3);
    let missing = dir.path().join("missing.json").display().to_string();
    assert_eq!(code(&run(&["check", "@chain", &missing])), 3);
    assert_eq!(code(&run(&["check", "@nonexistent", &cert("chain")])), 3);
    // A certificate for a different model.
    assert_eq!(code(&run(&["check", "@chain", &cert("split")])), 3);
    assert_eq!(code(&run(&["synth", &bad])), 3);
    assert_eq!(code(&run(&["synth", "@chain", "--bogus-flag"])), 3);
    let o = run(&["check", "@chain", &bad]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.json"));
}

#[test]
fn synth_chain_writes_a_checked_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("chain.cert.json");
    let smt = dir.path().join("chain.smt2");
    let o = run(&[
        "synth",
        &fixture("chain.json"),
        "--ni",
        "2",
        "--json",
        "-o",
        out.to_str().unwrap(),
        "--emit-smt",
        smt.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let r = json(&o);
    assert_eq!(r["status"], "certified");
    assert_eq!(r["config"]["mode"], "memless");
    assert_eq!(r["config"]["ni"], 2);
    assert_eq!(r["config"]["strengthen"], true);
    assert!(r["config"]["solver"].is_array());
    assert_eq!(r["check"]["overall"], "pass");
    assert!(r["phases"].is_object());
    let attempt = &r["attempts"][0];
    assert!(attempt["variables"].as_u64().unwrap() > 0);
    assert!(attempt["constraints"].as_u64().unwrap() > 0);
    assert!(std::fs::read_to_string(&smt)
        .unwrap()
        .contains("(check-sat)"));
    let c = run(&["check", "@chain", out.to_str().unwrap()]);
    assert_eq!(code(&c), 0, "{}", stdout(&c));
}

#[test]
fn synth_without_memoryless_certificate_exits_1() {
    let o = run(&[
        "synth",
        "@running-ex2",
        "--mode",
        "memless",
        "--ni",
        "4",
        "--json",
    ]);
    assert_eq!(code(&o), 1, "{}", stdout(&o));
    assert_eq!(json(&o)["exit_code"], 1);
}

#[test]
fn simulate_always_a_leaves_the_safe_set_at_step_3() {
    let dir = tempfile::tempdir().unwrap();
    let strategy = dir.path().join("always-a.json");
    std::fs::write(&strategy, r#"{"memoryless": {"A": {"a": "1", "b": "0"}}}"#).unwrap();
    let csv = dir.path().join("trace.csv");
    let o = run(&[
        "simulate",
        "@running",
        "--strategy",
        strategy.to_str().unwrap(),
        "--horizon",
        "5",
        "--json",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 1);
    let r = json(&o);
    assert_eq!(r["first_unsafe_step"], 3);
    assert_eq!(r["trace"][3], serde_json::json!(["7/8", "0", "1/8"]));
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "step,A,B,C,safe");
    assert_eq!(lines[4], "3,7/8,0,1/8,false");
    assert_eq!(lines.len(), 7);
}

#[test]
fn simulate_a_certificate_and_a_chain() {
    let o = run(&[
        "simulate",
        "@running-ex2",
        "--strategy",
        &cert("running-ex2"),
        "--horizon",
        "3",
    ]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let row: Vec<&str> = text.lines().nth(2).unwrap().split_whitespace().collect();
    assert_eq!(row, ["1", "1/2", "1/4", "1/4", "yes"], "{text}");
    assert_eq!(code(&run(&["simulate", "@chain", "--horizon", "50"])), 0);
    // Nondeterministic model without a strategy.
    assert_eq!(code(&run(&["simulate", "@running"])), 3);
}

#[test]
fn step2_dump_has_the_four_groups() {
    let o = run(&["dump", "@running", "--ni", "1", "--stage", "step2"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let groups: Vec<&str> = text
        .lines()
        .filter(|l| !l.starts_with(';'))
        .map(|l| l.split(['[', '.', ':']).next().unwrap())
        .collect();
    let mut distinct = groups.clone();
    distinct.dedup();
    assert_eq!(distinct, ["init", "strat", "inductive", "safe"]);
    assert!(text.contains("forall x."));
}

#[test]
fn step3_dump_has_no_state_variables() {
    for args in [
        ["dump", "@running", "--ni", "2", "--stage", "step3"],
        ["dump", "@split", "--ni", "3", "--stage", "step3"],
        ["dump", "@running-ex2", "--ni", "2", "--stage", "step3"],
    ] {
        let o = run(&args);
        assert_eq!(code(&o), 0);
        let text = stdout(&o);
        assert!(!text.contains("forall"));
        assert!(
            !text
                .split(|c: char| !(c.is_alphanumeric() || c == '_'))
                .any(|w| w.starts_with("x_")),
            "{args:?}"
        );
    }
}

#[test]
fn dumps_are_byte_stable() {
    for stage in ["step2", "step3", "smt"] {
        let args = ["dump", "@split", "--ni", "3", "--stage", stage];
        let first = run(&args).stdout;
        assert!(!first.is_empty());
        assert_eq!(run(&args).stdout, first, "{stage}");
    }
}

#[test]
fn export_matches_the_fixture_files() {
    for name in ["running-ex1", "running-ex2", "chain", "split"] {
        let o = run(&["export", name]);
        assert_eq!(code(&o), 0);
        let file = std::fs::read_to_string(fixture(&format!("{name}.json"))).unwrap();
        assert_eq!(stdout(&o), file, "{name}");
    }
}

#[test]
fn file_and_fixture_dumps_agree() {
    let a = run(&["dump", "@chain", "--ni", "2", "--stage", "smt"]).stdout;
    let b = run(&[
        "dump",
        &fixture("chain.json"),
        "--ni",
        "2",
        "--stage",
        "smt",
    ])
    .stdout;
    assert_eq!(a, b);
}

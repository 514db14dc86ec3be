use std::process::{Command, Output};

use serde_json::Value;

fn mu_kit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mu-kit"))
        .args(args)
        .env_remove("MUKIT_SEED")
        .output()
        .expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON document")
}

#[test]
fn scenario_reports_are_byte_identical() {
    let args = ["--no-timing", "--json", "scenario", "run", "all"];
    let a = mu_kit(&args);
    let b = mu_kit(&args);
    assert_eq!(
        a.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&a.stderr)
    );
    assert_eq!(a.stdout, b.stdout);
    let doc = json_of(&a);
    assert_eq!(doc["pass"], Value::Bool(true));
    assert!(doc.get("elapsed_ms").is_none());
}

#[test]
fn parallel_run_matches_sequential() {
    let seq = mu_kit(&["--no-timing", "--json", "scenario", "run", "all"]);
    let par = mu_kit(&[
        "--no-timing",
        "--json",
        "--parallel",
        "scenario",
        "run",
        "all",
    ]);
    assert_eq!(seq.stdout, par.stdout);
}

#[test]
fn list_covers_every_module() {
    let doc = json_of(&mu_kit(&["--json", "scenario", "list"]));
    let list = doc["outputs"]["scenarios"].as_array().unwrap();
    assert!(list.len() >= 12);
    for m in [
        "hull_solver",
        "measures",
        "mu_cert",
        "stability",
        "quantum_roof",
    ] {
        assert!(list.iter().any(|s| s["module"] == m), "{m}");
    }
    for s in list {
        assert!(s["name"].is_string() && s["expected"].is_object() && s["parameters"].is_object());
    }
}

#[test]
fn roof_filter_selects_quantum_scenarios_only() {
    let doc = json_of(&mu_kit(&["--json", "scenario", "list", "--filter", "roof"]));
    let list = doc["outputs"]["scenarios"].as_array().unwrap();
    assert!(!list.is_empty());
    assert!(list.iter().all(|s| s["module"] == "quantum_roof"));
}

#[test]
fn floats_use_17_significant_digits() {
    let out = mu_kit(&[
        "--no-timing",
        "--json",
        "scenario",
        "run",
        "lemma-2-ball-bound",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\"r\":2.5000000000000022e-1"), "{text}");
}

#[test]
fn exit_status_reflects_outcome() {
    assert_eq!(
        mu_kit(&["scenario", "run", "phi-plus-f2"]).status.code(),
        Some(0)
    );
    let fail = mu_kit(&["scenario", "run", "phi-plus-f2", "--set", "alpha=3"]);
    assert_eq!(fail.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&fail.stdout).contains("upper_bound: measured"));
    assert_eq!(
        mu_kit(&["scenario", "run", "no-such-scenario"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        mu_kit(&["scenario", "run", "phi-plus-f2", "--set", "beta=1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        mu_kit(&["cone", "--generators", "[[1,"]).status.code(),
        Some(2)
    );
    assert_eq!(mu_kit(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn seed_flag_and_environment() {
    let hex = json_of(&mu_kit(&[
        "--json",
        "--seed",
        "0x10",
        "scenario",
        "run",
        "product-state-f2",
    ]));
    assert_eq!(hex["inputs"]["seed"], 16);
    let env = Command::new(env!("CARGO_BIN_EXE_mu-kit"))
        .args(["--json", "scenario", "run", "product-state-f2"])
        .env("MUKIT_SEED", "7")
        .output()
        .unwrap();
    assert_eq!(json_of(&env)["inputs"]["seed"], 7);
}

#[test]
fn hull_command_reports_solution() {
    let out = mu_kit(&[
        "--json",
        "hull",
        "--set",
        r#"{"family":"StandardTruncatedSimplex","dim":3}"#,
        "--fn",
        "neg-sq-norm",
        "--point",
        "[0.25,0.25,0.25]",
        "--restarts",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json_of(&out);
    let v = doc["outputs"]["value"].as_f64().unwrap();
    // vertex formula: weight 3/4 on the unit vectors, each with f = −1
    assert!((v + 0.75).abs() < 1e-9, "{v}");
}

#[test]
fn roof_command_on_a_bell_state() {
    let out = mu_kit(&[
        "--json",
        "roof",
        "--state",
        "[[0.5,0,0,0.5],[0,0,0,0],[0,0,0,0],[0.5,0,0,0.5]]",
        "--dims",
        "2",
        "2",
        "--f",
        "alpha:2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out)["outputs"]["upper_bound"].as_f64().unwrap();
    assert!((v - 1.0).abs() < 1e-8, "{v}");
}

#[test]
fn ballbound_with_adversary() {
    let out = mu_kit(&[
        "--json",
        "ballbound",
        "--z",
        "[0.9,0,0]",
        "--delta",
        "0.5",
        "--trials",
        "20",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json_of(&out);
    assert!(
        doc["outputs"]["adversary"]["max_outside_mass"]
            .as_f64()
            .unwrap()
            <= 0.75 + 1e-7
    );
}

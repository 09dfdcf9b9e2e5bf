//! End-to-end behavior of the binary: JSON shapes, exit codes, certificate
//! round-trips, and determinism of outputs.

use std::process::{Command, Output};

use serde_json::Value;

fn torsep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_torsep"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn periods_defaults_to_the_worked_example() {
    let out = torsep(&["periods", "--p", "5", "--K", "3"]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["p"], 5);
    assert_eq!(v["K"], 3);
    assert_eq!(v["endo"], "a->ab, b->ba");
    assert!(v["periods"].is_array());
}

#[test]
fn identical_configs_produce_identical_bytes() {
    let a = torsep(&["periods", "--p", "5", "--K", "2", "--seed", "9"]);
    let b = torsep(&["periods", "--p", "5", "--K", "2", "--seed", "9"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn usage_and_input_errors_exit_two() {
    let out = torsep(&["periods", "--p", "4", "--K", "2"]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).expect("stderr is JSON");
    assert!(err["error"].as_str().unwrap().contains("not prime"));

    let out = torsep(&["injective", "--endo", "a->ab"]);
    assert_eq!(out.status.code(), Some(2));

    let out = torsep(&["periods", "--K", "2"]);
    assert_eq!(out.status.code(), Some(2), "missing --p is a usage error");
}

#[test]
fn negative_results_exit_one() {
    let out = torsep(&["injective", "--endo", "a->a, b->a"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stdout_json(&out)["injective"], false);

    let identity_tuple = r#"[[["1","0"],["0","1"]],[["1","0"],["0","1"]]]"#;
    let out = torsep(&["freeness", "--tuple", identity_tuple, "--L", "2"]);
    assert_eq!(out.status.code(), Some(1));
    let v = stdout_json(&out);
    assert_eq!(v["free"], false);
    assert_eq!(v["witness"], "a");
}

#[test]
fn non_periodic_points_are_negative_results() {
    // (A, B) mod 3 has a tail, so there is no period tower: exit 1 with a
    // structured reason, not an input error.
    let out = torsep(&["periods", "--p", "3", "--K", "3"]);
    assert_eq!(out.status.code(), Some(1));
    let v = stdout_json(&out);
    assert_eq!(v["periodic"], false);
    assert!(v["reason"].as_str().unwrap().contains("not periodic"));

    let out = torsep(&["lift-verify", "--p", "3", "--K", "2"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stdout_json(&out)["periodic"], false);
}

#[test]
fn search_periodic_enforces_budget() {
    let out = torsep(&["search-periodic", "--p", "5", "--budget", "10"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn normal_form_shape() {
    let out = torsep(&["normal-form", "--element", "t a t^-1"]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["m"], 0);
    assert_eq!(v["u"], "ab");
    assert_eq!(v["n"], 0);
}

#[test]
fn certificates_round_trip_through_the_binary() {
    let dir = std::env::temp_dir().join(format!("torsep-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("cert.json");

    let out = torsep(&[
        "separate",
        "--element",
        "t^-1 a t",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let cert = stdout_json(&out);
    assert_eq!(cert["version"], 1);
    assert!(cert["level"].as_u64().unwrap() >= 1);

    let out = torsep(&["verify-cert", "--path", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(stdout_json(&out)["verified"], true);

    // Tamper with the evidence: verification must fail with exit 1.
    let mut tampered: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let entry = tampered["evidence"].clone();
    if entry.get("shift").is_some() {
        tampered["evidence"]["shift"] = Value::from(entry["shift"].as_u64().unwrap() + 1);
    } else {
        tampered["evidence"]["value"] = Value::from("0");
    }
    let tampered_path = dir.join("tampered.json");
    std::fs::write(&tampered_path, tampered.to_string()).unwrap();
    let out = torsep(&["verify-cert", "--path", tampered_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stdout_json(&out)["verified"], false);

    // Wrong schema version: input error, exit 2.
    let mut wrong: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    wrong["version"] = Value::from(2);
    let wrong_path = dir.join("wrong-version.json");
    std::fs::write(&wrong_path, wrong.to_string()).unwrap();
    let out = torsep(&["verify-cert", "--path", wrong_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn separating_the_identity_is_an_input_error() {
    let out = torsep(&["separate", "--element", "t t^-1"]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(err["error"].as_str().unwrap().contains("identity"));
}

#[test]
fn inconclusive_separation_exits_one() {
    // t^6 is invisible at level 1: the period there is 6.
    let out = torsep(&["separate", "--element", "t t t t t t", "--max-level", "1"]);
    assert_eq!(out.status.code(), Some(1));
    let v = stdout_json(&out);
    assert_eq!(v["separated"], false);
}

#[test]
fn lift_verify_reports_its_exponent_source() {
    let out = torsep(&["lift-verify", "--p", "5", "--K", "2"]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["m_source"], "image_order");
    assert_eq!(v["M"], 12);

    let out = torsep(&["lift-verify", "--p", "5", "--K", "2", "--M", "12"]);
    assert!(out.status.success());
    assert_eq!(stdout_json(&out)["m_source"], "given");
}

//! End-to-end checks of the binary surface: exit codes and the wire
//! contracts, driven through the real executable.

use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_prismlab"))
}

#[test]
fn list_names_all_suites() {
    let out = bin().args(["verify", "--list"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["delta-axioms", "lemma-2.3", "prop-2.9", "tau-convergence"] {
        assert!(text.contains(name), "missing {name}");
    }
}

#[test]
fn verify_suite_passes_with_exit_zero() {
    let out = bin()
        .args(["verify", "--suite", "lemma-2.2", "--p", "3", "-E", "u^2-3"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rep: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rep["pass"], serde_json::json!(true));
    assert_eq!(rep["suite"], serde_json::json!("lemma-2.2"));
}

#[test]
fn bad_inputs_exit_two() {
    let out = bin().args(["verify", "--suite", "nope"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin()
        .args(["verify", "--suite", "lemma-2.2", "--p", "4"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2)); // 4 is not prime
    let out = bin()
        .args(["verify", "--suite", "lemma-2.2", "--p", "2", "-E", "u-3"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2)); // not Eisenstein at p = 2
}

#[test]
fn solve_reports_residual_and_verdict() {
    let dir = std::env::temp_dir().join("prismlab-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let problem = dir.join("rank1.json");
    std::fs::write(
        &problem,
        r#"{
            "prec": {"p": 2, "m": 8, "n": 16, "l": 20, "i": 14},
            "eisenstein": [-2, 1],
            "d": 1, "h": 1,
            "A_mat": [[[-2, 1]]],
            "B_mat": [[[1]]],
            "g": {"a": "1", "chi": "1"}
        }"#,
    )
    .unwrap();
    let out = bin()
        .args(["solve", "--problem", problem.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let res: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(res["residual_zero"], serde_json::json!(true));
    assert_eq!(res["verdict"], serde_json::json!("crystalline-at-precision"));
    assert!(res["convergence"].as_array().unwrap().len() >= 3);
}

#[test]
fn calc_pipeline_roundtrips() {
    let dir = std::env::temp_dir().join("prismlab-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let elem = dir.join("e.json");
    std::fs::write(
        &elem,
        r#"{
            "prec": {"p": 2, "m": 10, "n": 16, "l": 16, "i": 10},
            "eisenstein": [-2, 1],
            "elem": {"flavor": null, "terms": [{"gamma": 0, "coeff": {"l0": [-2, 1]}}]}
        }"#,
    )
    .unwrap();
    // identity pipeline echoes the element
    let out = bin()
        .args(["calc", "--elem", elem.to_str().unwrap(), "--op", "identity"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let echoed: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    // E canonicalizes to the slot-1 entry p
    assert_eq!(echoed["elem"]["terms"][0]["coeff"]["tail"][0]["l"], serde_json::json!(1));
    // phi then exact division by p is the distinguished unit: a second
    // division by p must fail with exit code 2
    let out = bin()
        .args([
            "calc",
            "--elem",
            elem.to_str().unwrap(),
            "--op",
            "phi",
            "--op",
            "exact-div-p",
            "--op",
            "exact-div-p",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("op 2"), "error should carry the pipeline position: {err}");
}

#[test]
fn schema_prints_wire_formats() {
    let out = bin().args(["schema", "--which", "problem"]).output().unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v.get("A_mat").is_some());
}

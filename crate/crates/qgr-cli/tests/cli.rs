//! End-to-end checks of the `qgr` binary against committed golden files.

use std::path::PathBuf;
use std::process::{Command, Output};

fn qgr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qgr"))
        .args(args)
        .env_remove("QGR_BUDGET_OVERRIDE")
        .output()
        .expect("qgr runs")
}

fn golden(name: &str) -> Vec<u8> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    std::fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn subst_b2_a3_table_is_byte_identical_to_golden() {
    let out = qgr(&["subst", "--src", "B2", "--tgt", "A3", "--window", "1"]);
    assert!(out.status.success());
    assert_eq!(out.stdout, golden("subst_b2_a3_window1.txt"));
}

#[test]
fn quiver_dot_is_byte_identical_to_golden() {
    let out = qgr(&["quiver", "--dot"]);
    assert!(out.status.success());
    assert_eq!(out.stdout, golden("quiver_a3.dot"));
}

#[test]
fn pair_reports_compatibility() {
    let text = stdout(&qgr(&["pair", "--type", "A2", "--seq", "1,2", "--n", "8"]));
    assert!(text.contains("compatibility: PASS"), "{text}");
    let json: serde_json::Value =
        serde_json::from_str(&stdout(&qgr(&["pair", "--type", "A2", "--seq", "1,2", "--n", "8", "--format", "json"])))
            .unwrap();
    assert_eq!(json["compatible"], true);
    assert_eq!(json["exchangeable"], serde_json::json!([1, 2, 3, 4, 5, 6]));
}

#[test]
fn identical_arguments_give_identical_bytes() {
    for args in [
        vec!["subst", "--src", "A2", "--tgt", "A2", "--window", "2", "--format", "json"],
        vec!["lt", "--type", "A2", "--monomial", "Y(1,0)Y(2,1)", "--format", "json"],
        vec!["quiver", "--format", "json"],
    ] {
        let a = stdout(&qgr(&args));
        let b = stdout(&qgr(&args));
        assert_eq!(a, b, "{args:?}");
    }
}

#[test]
fn subst_transports_a_character() {
    let text = stdout(&qgr(&["subst", "--src", "B2", "--tgt", "A3", "--char", "Y(1,-7)"]));
    let image = text.lines().nth(1).unwrap();
    assert_eq!(
        image,
        "Psi(chi_q) = Y(1,-3)^{-1}Y(2,-4) + Y(1,-5) + Y(2,-2)^{-1}Y(3,-3) + Y(3,-1)^{-1}"
    );
}

#[test]
fn tsys_and_characters() {
    let t = stdout(&qgr(&["tsys", "--type", "A1", "--p", "-2", "--s", "0"]));
    assert!(t.starts_with("T-system A1 vertex 1 [-2,0] Full: exact\n"), "{t}");
    assert!(t.contains("a_half = -2, b_half = 0\nresidual = 0\n"), "{t}");
    let q = stdout(&qgr(&["qchar", "--type", "A1", "--monomial", "Y(1,0)"]));
    assert_eq!(q, "chi_q(Y(1,0)) = Y(1,2)^{-1} + Y(1,0)\nterms: 2, thin: true\n");
}

#[test]
fn errors_carry_typed_exit_codes() {
    let bad_type = qgr(&["qchar", "--type", "Z9", "--monomial", "Y(1,0)"]);
    assert_eq!(bad_type.status.code(), Some(3));
    let not_thin = qgr(&["ft", "--type", "A1", "--monomial", "Y(1,0)^{2}"]);
    assert_eq!(not_thin.status.code(), Some(5));
    let budget = qgr(&["qchar", "--type", "A2", "--monomial", "Y(1,0)Y(2,1)", "--budget", "1"]);
    assert_eq!(budget.status.code(), Some(4));
}

#[test]
fn budget_override_from_the_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_qgr"))
        .args(["qchar", "--type", "A2", "--monomial", "Y(1,0)Y(2,1)", "--budget", "1"])
        .env("QGR_BUDGET_OVERRIDE", "100000")
        .output()
        .unwrap();
    assert!(out.status.success());
}

#[test]
fn verify_writes_a_scoreboard() {
    let dir = std::env::temp_dir().join(format!("qgr-verify-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("board.json");
    let out = qgr(&["verify", "--suite", "7,8", "--format", "json", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    let board: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(board["passed"], 2);
    assert_eq!(board["failed"], 0);
    let bad = qgr(&["verify", "--suite", "11"]);
    assert_eq!(bad.status.code(), Some(3));
}

use std::path::PathBuf;
use std::process::{Command, Output};

fn gennum(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gennum"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn scenario(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn eval_prints_normal_form_and_norm() {
    let o = gennum(&["eval", "e^(2) + 3*e^(1/2) @ mod(2,0) - e^(2)"]);
    assert!(o.status.success());
    assert_eq!(
        stdout(&o),
        "normal_form: 3*e^(1/2) @ mod(2,0)\nvaluation: 1/2\nnorm: e^-1/2\n"
    );
    let z = gennum(&["eval", "1 @ mod(2,0) - 1 @ mod(2,0)"]);
    assert_eq!(stdout(&z), "normal_form: 0\nvaluation: +inf\nnorm: 0\n");
}

#[test]
fn dist_is_the_norm_of_the_difference() {
    let o = gennum(&["dist", "1 + e^(1)", "1 + e^(1) + 5*e^(7/3)"]);
    assert_eq!(stdout(&o), "e^-7/3\n");
}

#[test]
fn check_e_pass_and_fail() {
    let ok = gennum(&["check-e", "const(1)"]);
    assert!(ok.status.success());
    assert!(stdout(&ok).starts_with("PASS"));
    let bad = gennum(&["check-e", "pow(1)"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stdout(&bad).starts_with("FAIL"));
}

#[test]
fn exit_codes_follow_the_verdict() {
    assert_eq!(gennum(&["run", &scenario("geometric_intersect.json")]).status.code(), Some(0));
    let broken = gennum(&["run", &scenario("broken_nesting.json")]);
    assert_eq!(broken.status.code(), Some(1));
    assert!(stdout(&broken).contains("failing_index: 5\n"));
    let malformed = gennum(&["run", &scenario("malformed.json")]);
    assert_eq!(malformed.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&malformed.stderr).contains("parse error"));
    assert_eq!(gennum(&["eval", "e^("]).status.code(), Some(2));
    assert_eq!(gennum(&["hb", &scenario("fixpoint_affine.json")]).status.code(), Some(2));
}

#[test]
fn flags_reach_the_scenario() {
    let o = gennum(&["--depth", "5", "--check-k", "40", "intersect", "--preset", "dense"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("depth: 5\n") && out.contains("check_k: 40\n"));
    assert!(out.ends_with("verdict: VERIFIED\n"));
}

#[test]
fn fixpoint_and_model_subcommands() {
    let f = gennum(&["fixpoint", "--steps", "4", "--order", "3"]);
    assert!(f.status.success());
    assert!(stdout(&f).contains("residual.4: e^-4\n"));
    let m = gennum(&["model", "e^(1)", "1"]);
    assert!(m.status.success());
    assert!(stdout(&m).contains("condition_e: PASS"));
}

#[test]
fn runs_are_byte_identical() {
    for name in ["hb_l2.json", "fixpoint_polynomial.json", "broken_nesting.json"] {
        let a = gennum(&["run", &scenario(name)]);
        let b = gennum(&["run", &scenario(name)]);
        assert_eq!(a.stdout, b.stdout, "{}", name);
        assert_eq!(a.status.code(), b.status.code());
    }
}

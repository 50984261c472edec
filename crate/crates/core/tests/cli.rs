use std::path::PathBuf;
use std::process::Command;

use omegacat::fraisse::{check_hp, check_jep, Budget, ToyClass, ToyRule};
use omegacat::report::Counterexample;
use omegacat::trees::build_tp2_witness;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = vec![];
    let mut err = vec![];
    let argv = std::iter::once("omegacat").chain(args.iter().copied());
    let code = omegacat::cli::run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("omegacat-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn path_str(p: &PathBuf) -> &str {
    p.to_str().unwrap()
}

#[test]
fn decide_prints_true() {
    let (code, out, _) = run(&["decide", "forall x. E1(x;x)", "--maxarity", "2"]);
    assert_eq!((code, out.as_str()), (0, "true\n"));
    let (code, out, _) = run(&["decide", "forall x. forall y. E1(x;y)", "--maxarity", "2"]);
    assert_eq!((code, out.as_str()), (1, "false\n"));
}

#[test]
fn usage_errors_exit_three() {
    let (code, _, err) = run(&["frobnicate"]);
    assert_eq!(code, 3);
    assert!(err.contains("Usage"), "{err}");
    let (code, _, err) = run(&["decide", "forall x. E1(x;x)", "--bogus"]);
    assert_eq!(code, 3);
    assert!(err.contains("Usage"), "{err}");
    assert_eq!(run(&["decide", "forall x. (", "--maxarity", "2"]).0, 3);
    assert_eq!(run(&["validate", "/nonexistent/file.te"]).0, 3);
    assert_eq!(run(&["--help"]).0, 0);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_omegacat");
    let st = Command::new(bin).args(["decide", "exists x. !E1(x;x)"]).output().unwrap();
    assert_eq!(st.status.code(), Some(1));
    assert_eq!(st.stdout, b"false\n");
    let st = Command::new(bin).arg("nope").output().unwrap();
    assert_eq!(st.status.code(), Some(3));
}

#[test]
fn check_class_agrees_with_the_library() {
    let (code, out, _) = run(&["check-class", "--class", "TOY-EVEN", "--size-bound", "3"]);
    assert_eq!(code, 1);
    let lib = check_hp(&ToyClass::new(ToyRule::EvenSize), 3, Budget::default()).unwrap();
    assert!(out.contains(&format!("HP fail (budget {})", lib.budget_used)), "{out}");
    assert!(out.contains(&lib.counterexample.unwrap().to_text()));
    let (code, out, _) = run(&["check-class", "--class", "toy-singleton", "--size-bound", "2"]);
    assert_eq!(code, 1);
    let jep = check_jep(&ToyClass::new(ToyRule::Singleton), 2, Budget::default()).unwrap();
    assert!(out.contains(&format!("JEP {}", jep.verdict)), "{out}");
    let (code, out, _) = run(&["check-class", "--class", "KE", "--maxarity", "1", "--size-bound", "3"]);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("(*) 2 variables: count 3"), "{out}");
}

#[test]
fn failing_reports_replay_to_fail() {
    let cex = scratch("hp.cex");
    let (code, _, _) = run(&["check-class", "--class", "TOY-EVEN", "--size-bound", "3", "-o", path_str(&cex)]);
    assert_eq!(code, 1);
    let text = std::fs::read_to_string(&cex).unwrap();
    assert_eq!(Counterexample::parse(&text).unwrap().kind(), "hp");
    let (code, out, _) = run(&["--replay", path_str(&cex), "check-class", "--class", "TOY-EVEN"]);
    assert_eq!(code, 1, "{out}");
    assert!(out.starts_with("replay hp confirmed"));
    // The same member is not a failure for the class with every size.
    let (code, _, _) = run(&["--replay", path_str(&cex), "check-class", "--class", "TOY-SINGLETON"]);
    assert_eq!(code, 0);
}

#[test]
fn extension_failures_replay_with_an_inferred_class() {
    let host = scratch("small.te");
    std::fs::write(&host, "te pair\nsize 2\nmaxarity 1\nend\n").unwrap();
    let cex = scratch("ext.cex");
    let (code, _, _) = run(&["homog", path_str(&host), "-o", path_str(&cex)]);
    assert_eq!(code, 1);
    let (code, out, _) = run(&["--replay", path_str(&cex), "validate", path_str(&host)]);
    assert_eq!(code, 1, "{out}");
}

#[test]
fn tp2_writes_the_witness_structure() {
    let w = scratch("w.te");
    let (code, out, _) = run(&["tp2", "--rows", "3", "--cols", "3", "-o", path_str(&w)]);
    assert_eq!(code, 0);
    let lib = build_tp2_witness(3, 3).unwrap();
    assert!(out.contains(&lib.report.to_text()), "{out}");
    let written = std::fs::read_to_string(&w).unwrap();
    assert_eq!(omegacat::te::parse_te(&written).unwrap(), lib.structure);
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let (a, b) = (scratch("lim-a.te"), scratch("lim-b.te"));
    for p in [&a, &b] {
        run(&["limit", "--class", "KE", "--maxarity", "2", "--steps", "30", "--seed", "4", "-o", path_str(p)]);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let (_, x, _) = run(&["sop2-refute", "--generate", "--seed", "9", "--tuple-length", "2"]);
    let (_, y, _) = run(&["sop2-refute", "--generate", "--seed", "9", "--tuple-length", "2"]);
    assert_eq!(x, y);
}

#[test]
fn json_mirrors_the_report() {
    let (code, out, _) = run(&["--json", "tp2", "--rows", "2", "--cols", "2"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(out.trim()).unwrap();
    let lib = build_tp2_witness(2, 2).unwrap().report;
    assert_eq!(v["verdict"], "pass");
    assert_eq!(v["budget_used"], lib.budget_used);
    assert_eq!(v["details"], serde_json::json!(lib.details));
    assert!(v["counterexample"].is_null());
    assert!(v["output"].as_str().unwrap().starts_with("te tp2-2x2"));
}

#[test]
fn encode_then_decode_round_trips() {
    let x = scratch("x.fms");
    let text = "structure X\nsort P 2\nsort Q 3\nrel R : P Q\nR P/0 Q/1\nR P/1 Q/2\nend\n";
    std::fs::write(&x, text).unwrap();
    let n = scratch("x.te1s");
    assert_eq!(run(&["encode", path_str(&x), "-o", path_str(&n)]).0, 0);
    assert_eq!(run(&["validate", path_str(&n)]).0, 0);
    let (code, out, _) = run(&["decode", path_str(&n)]);
    assert_eq!(code, 0);
    let back = omegacat::structure::parse_structure(out.split_once("budget 1\n").unwrap().1).unwrap();
    let orig = omegacat::structure::parse_structure(text).unwrap();
    assert!(omegacat::structure::is_isomorphic(&orig, &back).unwrap().is_some());
    // A lifted relation makes the triviality claim inapplicable.
    assert_eq!(run(&["induced", path_str(&n), "--random", "3"]).0, 2);
}

#[test]
fn induced_on_a_pure_base() {
    let x = scratch("pure.fms");
    std::fs::write(&x, "structure Y\nsort P 2\nsort Q 2\nend\n").unwrap();
    let n = scratch("pure.te1s");
    run(&["encode", path_str(&x), "-o", path_str(&n)]);
    let (code, out, _) = run(&["induced", path_str(&n), "--formula", "exists z:S1. !(z = a)", "--random", "4"]);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("5 equality form"), "{out}");
}

#[test]
fn validate_reports_bad_classes_as_fail() {
    let bad = scratch("bad.te");
    std::fs::write(&bad, "te bad\nsize 2\nmaxarity 1\nclass E1 (0) (0,1)\nend\n").unwrap();
    let (code, out, _) = run(&["validate", path_str(&bad)]);
    assert_eq!(code, 1);
    assert!(out.contains("not an 1-tuple"), "{out}");
}

#[test]
fn amalgamate_modes() {
    let (a, b, c) = (scratch("a.te"), scratch("b.te"), scratch("c.te"));
    std::fs::write(&a, "te a\nsize 1\nmaxarity 1\nend\n").unwrap();
    std::fs::write(&b, "te b\nsize 2\nmaxarity 1\nclass E1 (0) (1)\nend\n").unwrap();
    std::fs::write(&c, "te c\nsize 2\nmaxarity 1\nend\n").unwrap();
    let span = ["amalgamate", "--base", path_str(&a), "--left", path_str(&b), "--right", path_str(&c)];
    let (code, out, _) = run(&[&span[..], &["--to-left", "0", "--to-right", "0"]].concat());
    assert_eq!(code, 0);
    assert!(out.contains("class E1 (0) (1)\nend"), "{out}");
    assert_eq!(run(&[&span[..], &["--to-left", "0", "--to-right", "7"]].concat()).0, 3);
    let host = scratch("host.te");
    std::fs::write(&host, "te h\nsize 4\nmaxarity 1\nend\n").unwrap();
    let (code, out, _) = run(&["amalgamate", path_str(&host), "--a", "0", "--b", "1", "--c", "2", "--d1", "3", "--d2", "3"]);
    assert_eq!(code, 0);
    assert!(out.contains("d (2)"), "{out}");
}

#[test]
fn sop2_verbs_on_a_generated_family() {
    let fam = scratch("fam.tree");
    let (code, out, _) = run(&["sop2-refute", "--generate", "--seed", "3", "-o", path_str(&fam)]);
    assert_eq!(code, 0, "{out}");
    let head = out.lines().next().unwrap();
    let rest = head.strip_prefix("formula ").unwrap();
    let (formula, rest) = rest.split_once(" object ").unwrap();
    let (object, params) = rest.split_once(" params ").unwrap();
    let args = ["--formula", formula, "--object", object, "--params", params];
    let (code, _, _) = run(&[&["sop2-refute", path_str(&fam)][..], &args].concat());
    assert_eq!(code, 0);
    // The refuted configuration cannot also be an SOP2 tree.
    let cex = scratch("sop2.cex");
    let (code, _, _) = run(&[&["sop2-check", path_str(&fam), "-o", path_str(&cex)][..], &args].concat());
    assert_eq!(code, 1);
    let (code, _, _) = run(&[&["--replay", path_str(&cex), "sop2-check", path_str(&fam)][..], &args].concat());
    assert_eq!(code, 1);
}

#[test]
fn qe_prints_a_quantifier_free_formula() {
    let (code, out, _) = run(&["qe", "exists z. E1(x;z) & !E1(y;z)", "--maxarity", "1"]);
    assert_eq!(code, 0);
    let f = omegacat::logic::parse_formula(out.trim(), omegacat::logic::Dialect::Le).unwrap();
    assert!(f.is_quantifier_free(), "{out}");
}

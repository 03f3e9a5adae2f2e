use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;
use ueq_core::oracle::count_words_by_length;
use ueq_core::{parse_grammar, to_cnf};

fn grammar(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../grammars")
        .join(name)
}

fn ueq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ueq"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn check_json(a: &str, b: &str, extra: &[&str]) -> (i32, Value) {
    let (a, b) = (grammar(a), grammar(b));
    let mut args = vec!["check", a.to_str().unwrap(), b.to_str().unwrap(), "--json"];
    args.extend_from_slice(extra);
    let out = ueq(&args);
    (
        out.status.code().unwrap(),
        serde_json::from_slice(&out.stdout).unwrap(),
    )
}

#[test]
fn normalize_prints_cnf_and_size() {
    let out = ueq(&["normalize", grammar("pair_left.cfg").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("# size: 4"), "{text}");
    let back = to_cnf(&parse_grammar(&text).unwrap()).unwrap();
    assert_eq!(back.size(), 4);
    let original = to_cnf(
        &parse_grammar(&std::fs::read_to_string(grammar("pair_left.cfg")).unwrap()).unwrap(),
    )
    .unwrap();
    assert_eq!(
        count_words_by_length(&back, 6),
        count_words_by_length(&original, 6)
    );
}

#[test]
fn normalize_keeps_the_empty_word() {
    let dir = std::env::temp_dir().join(format!("ueq-cli-eps-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("eps.cfg");
    std::fs::write(&path, "S -> eps\n").unwrap();
    let out = ueq(&["normalize", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(
        text.contains("# size: 0") && text.contains("S -> eps"),
        "{text}"
    );
    let back = to_cnf(&parse_grammar(&text).unwrap()).unwrap();
    assert!(back.generates_empty_word() && back.is_body_empty());
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn normalize_reports_parse_errors() {
    let out = ueq(&["normalize", grammar("malformed.cfg").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn pair_with_equal_images_is_different() {
    let (code, r) = check_json("pair_left.cfg", "pair_right.cfg", &[]);
    assert_eq!(code, 1);
    assert_eq!(r["overall"]["ProvenDifferent"]["Word"]["word"], "ab");
    assert_eq!(r["first_difference"]["witness"]["derivations_first"], "1");
    assert_eq!(r["first_difference"]["witness"]["derivations_second"], "0");
    assert_eq!(r["parikh_exact"]["equal"], true);
    assert!(r["comm_numeric"]["outcome"]["Ok"]["PointwiseEqual"].is_object());
    assert_eq!(r["comm_numeric"]["epsilon"], "1/32");
    assert_eq!(
        r["matrix_slice"]["outcome"]["Ok"]["DistinguishedAtLength"]["n"],
        2
    );
    let notes = r["notes"].to_string();
    assert!(notes.contains("commutative images agree"), "{notes}");
    assert_eq!(r["inputs"]["alphabet"], serde_json::json!(["a", "b"]));
    assert_eq!(r["inputs"]["first"]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn identical_files_are_consistent_with_equal() {
    let (code, r) = check_json("dyck.cfg", "dyck.cfg", &["--max-len", "10"]);
    assert_eq!(code, 0);
    let overall = &r["overall"]["ConsistentWithEqual"];
    assert_eq!(overall["max_len"], 10);
    assert_eq!(overall["degree"], 8);
    assert_eq!(overall["dim"], 3);
    assert_eq!(overall["trials"], 8);
    assert!(r["first_difference"]["witness"].is_null());
}

#[test]
fn permutation_pair_fools_two_by_two_matrices() {
    let (code, r) = check_json("perm_even.cfg", "perm_odd.cfg", &["--dim", "2"]);
    assert_eq!(code, 1);
    assert_eq!(
        r["overall"]["ProvenDifferent"]["Word"]["word"],
        "x1 x2 x3 x4"
    );
    assert!(r["matrix_slice"]["outcome"]["Ok"]["IndistinguishableUpTo"].is_object());
    let notes = r["notes"].to_string();
    assert!(notes.contains("polynomial identity"), "{notes}");

    let (_, r3) = check_json("perm_even.cfg", "perm_odd.cfg", &["--dim", "3"]);
    assert_eq!(
        r3["matrix_slice"]["outcome"]["Ok"]["DistinguishedAtLength"]["n"],
        4
    );
}

#[test]
fn different_lengths_show_in_slice_counts() {
    let (code, r) = check_json("single_a.cfg", "single_aa.cfg", &["--max-len", "2"]);
    assert_eq!(code, 1);
    assert_eq!(r["overall"]["ProvenDifferent"]["Word"]["word"], "a");
    assert_eq!(r["slice_counts"]["first_mismatch"], 1);
}

#[test]
fn ambiguous_input_violates_the_promise() {
    let (code, r) = check_json("ambiguous.cfg", "ambiguous.cfg", &[]);
    assert_eq!(code, 3);
    assert_eq!(r["overall"]["PromiseViolated"]["word"], "aaa");
    assert_eq!(r["promise_audit"]["first"], "aaa");
}

#[test]
fn incompatible_alphabets_are_an_error() {
    let out = ueq(&[
        "check",
        grammar("single_a.cfg").to_str().unwrap(),
        grammar("single_b.cfg").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("incompatible"));
}

#[test]
fn reports_are_deterministic() {
    let a = check_json("pair_left.cfg", "pair_right.cfg", &["--seed", "7"]);
    let b = check_json("pair_left.cfg", "pair_right.cfg", &["--seed", "7"]);
    assert_eq!(a, b);
}

#[test]
fn human_report_names_every_stage() {
    let out = ueq(&[
        "check",
        grammar("pair_left.cfg").to_str().unwrap(),
        grammar("pair_right.cfg").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    for needle in [
        "promise audit",
        "first difference: `ab`",
        "slice sizes",
        "Parikh coefficients: equal up to degree 8",
        "matrix substitution (3x3",
        "commutative images (ε = 1/32",
        "verdict: DIFFERENT",
    ] {
        assert!(text.contains(needle), "missing {needle:?} in\n{text}");
    }
}

#[test]
fn smt_subcommand_and_flag_write_the_sentence() {
    let dir = std::env::temp_dir().join(format!("ueq-cli-smt-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let (a, b) = (grammar("pair_left.cfg"), grammar("pair_right.cfg"));
    let file = dir.join("pair.smt2");
    let out = ueq(&[
        "smt",
        a.to_str().unwrap(),
        b.to_str().unwrap(),
        "-o",
        file.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let sentence = std::fs::read_to_string(&file).unwrap();
    assert!(sentence.contains("(forall (") && sentence.contains("(< (* a 32) 1)"));

    let other = dir.join("flag.smt2");
    let out = ueq(&[
        "check",
        a.to_str().unwrap(),
        b.to_str().unwrap(),
        "--emit-smt",
        other.to_str().unwrap(),
        "--json",
    ]);
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["smt_emitted"], other.to_str().unwrap());
    assert_eq!(std::fs::read_to_string(&other).unwrap(), sentence);
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn identity_demo_transcripts() {
    let out = ueq(&["identity-demo", "--dim", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(
        text.contains("24 monomials (12 with +1, 12 with -1)"),
        "{text}"
    );
    assert!(text.contains("zero on all 100 random 2x2"), "{text}");
    assert!(text.contains("nonzero on 3x3"), "{text}");
    assert!(text.contains("2x2: indistinguishable"), "{text}");
    assert!(text.contains("3x3: distinguished at length 4"), "{text}");

    let one = stdout(&ueq(&["identity-demo", "--dim", "1"]));
    assert!(one.contains("s_2 = X1·X2 - X2·X1"), "{one}");

    let out = ueq(&["identity-demo", "--dim", "5"]);
    assert_eq!(out.status.code(), Some(2));
}

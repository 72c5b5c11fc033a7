use std::io::Write;
use std::process::{Command, Output};

fn dulac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dulac")).args(args).env_remove("DULAC_PRECISION").output().unwrap()
}

fn data(name: &str) -> String {
    format!("{}/../../data/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn counterexample_reports_gap_with_exit_one() {
    let o = dulac(&["counterexample"]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.trim_end().ends_with("result GapDetected"), "{out}");
    assert!(out.contains("validity Invalid scale=1/2 witness=-1"), "{out}");
    assert!(out.contains("body scale=2 p=1"), "{out}");
}

#[test]
fn unit_scale_spec_stays_at_scale_one() {
    let o = dulac(&["decompose", "--spec", &data("unit-scale.poly"), "--order", "6"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("scales 1:0\n"), "{out}");
    assert!(!out.contains("escalation"), "{out}");
    assert!(out.contains("sign=-"), "{out}");
}

#[test]
fn identity_word_has_infinite_margin() {
    let o = dulac(&["oracle-check", "--word", &data("id.word")]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("min_margin inf"), "{out}");
    assert!(out.starts_with("# precision_bits=256"), "{out}");
}

#[test]
fn precision_comes_from_the_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_dulac"))
        .args(["oracle-check", "--word", "id"])
        .env("DULAC_PRECISION", "512")
        .output()
        .unwrap();
    assert!(stdout(&o).starts_with("# precision_bits=512"));
    let o = dulac(&["oracle-check", "--word", "id", "--precision", "128"]);
    assert!(stdout(&o).starts_with("# precision_bits=128"));
}

#[test]
fn input_errors_exit_two() {
    for args in [
        vec!["decompose", "--word", "aff(0,1)"],
        vec!["decompose", "--word", "exp ;"],
        vec!["invert", "1.5*E(-1)"],
        vec!["decompose"],
        vec!["oracle-check", "--word", "id", "--precision", "8"],
    ] {
        let o = dulac(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"), "{args:?}");
    }
    assert_eq!(dulac(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn semantic_errors_name_the_invariant() {
    let o = dulac(&["decompose", "--word", "aff(0,1)"]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("alpha must be positive"));
}

#[test]
fn group_verbs_round_trip() {
    let inv = stdout(&dulac(&["invert", "1*E(-1) | floor=-4"]));
    assert_eq!(inv.trim(), "-1*E(-1) + -1*E(-2) + -3/2*E(-3) | floor=-4");
    let id = stdout(&dulac(&["compose", "1*E(-1) | floor=-4", inv.trim()]));
    assert_eq!(id.trim(), "0 | floor=-4");
    let exp = stdout(&dulac(&["expand", "--tail", "1", "--order", "3"]));
    assert!(exp.contains("deviation -1*E(-1) + 1/2*E(-2) | floor=-3"), "{exp}");
}

#[test]
fn conjugation_by_exp_prints_a_star_series() {
    let o = dulac(&["conjugate", "--exp", "-1*E(-1) + 1/2*E(-2) | floor=-4", "--order", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.starts_with("STAR{scale=1, principal=-5/2"), "{out}");
    let shifted = stdout(&dulac(&["conjugate", "1*E(-1) | floor=-3", "--alpha", "2", "--beta", "0"]));
    assert_eq!(shifted.trim(), "2*E(-1/2) | floor=-3/2");
}

#[test]
fn validity_and_order_verbs_use_exit_one_for_failures() {
    let o = dulac(&["check-validity", "--theoretical"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("witness=-1 magnitude=1"));
    let star = "STAR{scale=1, principal=exact, coeff=exact, rays=[]; ([1*E(0) | exact])*EE{-1@1}}";
    assert_eq!(dulac(&["check-validity", star]).status.code(), Some(0));
    let o = dulac(&["order", star]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let nf = dulac(&["normal-form", star]);
    assert_eq!(stdout(&nf).trim(), star);
}

#[test]
fn files_and_inline_text_are_interchangeable() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "exp ; ln").unwrap();
    let path = f.path().to_str().unwrap().to_string();
    let a = stdout(&dulac(&["decompose", "--word", &path]));
    let b = stdout(&dulac(&["decompose", "--word", "exp ; ln"]));
    assert_eq!(a, b);
    assert!(a.contains("affine aff(1, 0)"));
}

#[test]
fn reports_are_deterministic() {
    let args = ["flatness", "--spec", &data("counterexample.poly"), "--grid", "2:5:1/2"];
    let (a, b) = (dulac(&args), dulac(&args));
    assert_eq!(a.stdout, b.stdout);
    let out = stdout(&a);
    assert!(out.contains("(binary64)"), "{out}");
    let sigma: f64 =
        out.lines().find_map(|l| l.strip_prefix("sigma ")).unwrap().split(' ').next().unwrap().parse().unwrap();
    assert!((sigma - 1.0).abs() < 0.05, "{sigma}");
}

#[test]
fn oracle_check_fails_a_wrong_expansion() {
    let good = dulac(&["oracle-check", "--word", "h(-1*E(-1) | floor=-3)", "--series", "-1*E(-1) | floor=-3"]);
    assert_eq!(good.status.code(), Some(0), "{}", stdout(&good));
    let bad = dulac(&["oracle-check", "--word", "h(-1*E(-1) | floor=-3)", "--series", "-1*E(-1) + 1*E(-2) | floor=-3"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stdout(&bad).trim_end().ends_with("FAIL"));
}

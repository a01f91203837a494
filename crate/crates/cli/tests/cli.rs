use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use theta_lab::torus::E8_FORM;

fn theta_lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_theta-lab")).args(args).output().expect("spawn theta-lab")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn status_line<'a>(text: &'a str, check: &str) -> &'a str {
    text.lines().find(|l| l.split_whitespace().nth(1) == Some(check)).unwrap_or_else(|| panic!("no {check} in\n{text}"))
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn e8_check_passes_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("e8.json");
    let o = theta_lab(&["e8-check", "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["verdict"], "pass");
    assert_eq!(report["checks"].as_array().unwrap().len(), 10);
}

#[test]
fn perturbed_form_fails_but_stays_antisymmetric() {
    let dir = tempfile::tempdir().unwrap();
    let mut rows = E8_FORM;
    rows[0][1] = 3;
    rows[1][0] = -3;
    let text: String =
        rows.iter().map(|r| r.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ") + "\n").collect();
    let m = dir.path().join("m.txt");
    fs::write(&m, text).unwrap();
    let o = theta_lab(&["e8-check", "--matrix", path(&m)]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(status_line(&text, "antisymmetric").starts_with("pass"));
    assert!(status_line(&text, "frobenius_type").starts_with("fail"));
}

#[test]
fn ragged_matrix_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.txt");
    fs::write(&m, "0 1\n-1\n").unwrap();
    assert_eq!(theta_lab(&["e8-check", "--matrix", path(&m)]).status.code(), Some(2));
}

#[test]
fn build_rejects_inadmissible_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.json");
    let o = theta_lab(&["build", "--n", "3", "--g", "4", "--delta", "2", "--seed", "1", "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn unknown_suite_and_key_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let s = dir.path().join("s.json");
    assert_eq!(theta_lab(&["build", "--out", path(&s)]).status.code(), Some(0));
    assert_eq!(theta_lab(&["verify", "--scenario", path(&s), "--suite", "bogus"]).status.code(), Some(2));
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "colour = red\n").unwrap();
    assert_eq!(theta_lab(&["verify", "--scenario", path(&s), "--config", path(&cfg)]).status.code(), Some(2));
    assert_eq!(theta_lab(&["verify"]).status.code(), Some(2));
}

#[test]
fn build_then_verify_g4() {
    let dir = tempfile::tempdir().unwrap();
    let (s, r) = (dir.path().join("s.json"), dir.path().join("r.json"));
    let o = theta_lab(&["build", "--n", "2", "--g", "4", "--delta", "2", "--seed", "7", "--out", path(&s)]);
    assert_eq!(o.status.code(), Some(0));
    let o = theta_lab(&["verify", "--scenario", path(&s), "--out", path(&r)]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    for check in ["decomposition", "y_translate_in_theta", "finite_singular_set", "gauss_image_in_annihilator"] {
        assert!(status_line(&text, check).starts_with("pass"), "{check}");
    }

    // the saved report pretty-prints and lists every check
    let o = theta_lab(&["report", path(&r)]);
    assert_eq!(o.status.code(), Some(0));
    let printed = stdout(&o);
    assert!(printed.contains("verdict: pass"));
    assert!(printed.contains("finite_singular_set"));
}

#[test]
fn control_has_no_positive_dimensional_fiber() {
    let dir = tempfile::tempdir().unwrap();
    let s = dir.path().join("c.json");
    let o = theta_lab(&["build", "--control", "--g", "2", "--seed", "3", "--out", path(&s)]);
    assert_eq!(o.status.code(), Some(0));
    let o = theta_lab(&["verify", "--scenario", path(&s), "--suite", "gauss"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("no positive-dimensional fiber found"));
    let o = theta_lab(&["verify", "--scenario", path(&s)]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(status_line(&stdout(&o), "control_singular_set_empty").starts_with("pass"));
}

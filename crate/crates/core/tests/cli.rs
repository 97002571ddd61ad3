mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use common::{balanced, corpus};

fn forge(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_psv-forge"))
        .args(args)
        .arg("-o")
        .arg(out)
        .output()
        .unwrap()
}

fn path(sub: &str, name: &str) -> String {
    corpus(sub).join(name).display().to_string()
}

#[test]
fn clean_script_exits_zero() {
    let d = tempfile::tempdir().unwrap();
    let o = forge(&[&path("proofs", "and_comm.v")], d.path());
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let tex = fs::read_to_string(d.path().join("and_comm.tex")).unwrap();
    assert!(tex.starts_with("\\documentclass"));
    assert!(tex.contains("\\psvCompletion{Qed}"));
    balanced(&tex).unwrap();
}

#[test]
fn failing_proof_exits_one_with_location() {
    let d = tempfile::tempdir().unwrap();
    let o = forge(&[&path("negative", "wrong_bullet.v")], d.path());
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(
        err.contains("wrong_bullet.v:") && err.contains("[WrongBullet]"),
        "{err}"
    );
    assert!(d.path().join("wrong_bullet.tex").exists());
}

#[test]
fn missing_input_exits_two() {
    let d = tempfile::tempdir().unwrap();
    let o = forge(&["no/such/file.v"], d.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_flag_exits_two() {
    let d = tempfile::tempdir().unwrap();
    let o = forge(&["--layout", "vertical", &path("proofs", "id.v")], d.path());
    assert_eq!(o.status.code(), Some(2));
    let o = forge(&["--macro-prefix", "9x", &path("proofs", "id.v")], d.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn warnings_gate_the_exit_code_on_request() {
    let d = tempfile::tempdir().unwrap();
    let script = path("warnings", "superfluous_bullet.v");
    let o = forge(&[&script], d.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("[SuperfluousBullet]"));
    let o = forge(&["--fail-on-warning", &script], d.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn per_proof_fragments_use_the_prefix() {
    let d = tempfile::tempdir().unwrap();
    let o = forge(
        &[
            "--split",
            "per-proof",
            "--fragment",
            "--macro-prefix",
            "pf",
            &path("proofs", "reuse.v"),
        ],
        d.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    let mut names: Vec<String> = fs::read_dir(d.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(names.len(), 3, "{names:?}");
    assert!(names.contains(&"reuse__index.tex".to_string()));
    for n in &names {
        let tex = fs::read_to_string(d.path().join(n)).unwrap();
        assert!(!tex.contains("\\documentclass"));
        assert!(!tex.contains("\\psv"), "{n}");
        balanced(&tex).unwrap();
    }
}

#[test]
fn trace_input_renders() {
    let d = tempfile::tempdir().unwrap();
    let trace = d.path().join("t.json");
    fs::write(
        &trace,
        r#"{"psv_trace_version": 1, "source_file": "demo.v", "proofs": [
            {"kind": "Lemma", "name": "t", "statement": "A -> A", "completion": "Qed",
             "steps": [
                {"sentence": "intro H.", "goals": [{"hyps": [{"name": "H", "type": "A"}], "concl": "A"}]},
                {"sentence": "exact H.", "goals": []}
             ]}]}"#,
    )
    .unwrap();
    let out = d.path().join("out");
    let o = forge(&["--trace", trace.to_str().unwrap()], &out);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let tex = fs::read_to_string(out.join("demo.tex")).unwrap();
    assert!(tex.contains("\\psvTactic{exact H.}"));

    fs::write(
        &trace,
        r#"{"psv_trace_version": 2, "source_file": "x.v", "proofs": []}"#,
    )
    .unwrap();
    let o = forge(&["--trace", trace.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("VersionMismatch"));
}

use std::process::{Command, Output};

fn nfwb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nfwb")).args(args).output().unwrap()
}

fn records(out: &Output) -> Vec<serde_json::Value> {
    String::from_utf8_lossy(&out.stdout).lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

#[test]
fn stratify_file_records() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("c.tst");
    std::fs::write(&p, "x in y & y in z\nx in x\n").unwrap();
    let out = nfwb(&["stratify", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let recs = records(&out);
    assert_eq!(recs.len(), 2);
    assert!(recs.iter().all(|r| r["kind"] == "stratify"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(nfwb(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(nfwb(&["stratify", "/nonexistent/file.tst"]).status.code(), Some(2));
    assert_eq!(nfwb(&["fm", "--k", "0", "build"]).status.code(), Some(2));
}

#[test]
fn expect_pass_turns_negative_verdicts_into_failure() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("w.json");
    std::fs::write(&p, r#"{"[0,1,2]": 1, "[1,2]": 2, "[0,1]": 1, "[0,2]": 2, "[1]": 2, "[2]": 4, "[0]": 1}"#).unwrap();
    let w = p.to_str().unwrap();
    assert_eq!(nfwb(&["web", "check", w]).status.code(), Some(0));
    assert_eq!(nfwb(&["--expect", "pass", "web", "check", w]).status.code(), Some(1));
    // the sweep verdict holds when no fragment passes both checks
    assert_eq!(nfwb(&["--expect", "pass", "web", "sweep", "--lambda", "3", "--cap", "16"]).status.code(), Some(0));
    assert_eq!(nfwb(&["--expect", "pass", "fm", "lemma", "extension"]).status.code(), Some(0));
}

#[test]
fn fm_orbit_pair_record() {
    let out = nfwb(&["fm", "orbit", "--s", "c0:L0:a0", "--t", "c0:L1:a2"]);
    assert_eq!(out.status.code(), Some(0));
    let r = &records(&out)[0];
    assert_eq!(r["kind"], "fm_orbit");
    assert!(r["params"].is_object());
}

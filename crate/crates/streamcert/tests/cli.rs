use std::path::Path;
use std::process::{Command, Output};

fn streamcert(args: &[&str], input: Option<&Path>) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_streamcert"));
    c.args(args).env_remove("STREAMCERT_FIELD");
    if let Some(p) = input {
        c.arg("--input").arg(p);
    }
    c.output().unwrap()
}

#[test]
fn exit_codes_and_json_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.txt");
    std::fs::write(&path, "# n=100 model=strict\n5 3\n7 2\n5 4\n").unwrap();

    let ok = streamcert(&["pointquery", "--query", "5", "--seed", "3"], Some(&path));
    assert_eq!(ok.status.code(), Some(0));
    let j: serde_json::Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert_eq!(j["value"], 7);
    assert_eq!(j["seed"], 3);
    for key in ["scheme", "outcome", "hcost_bits", "vcost_words"] {
        assert!(j.get(key).is_some(), "{key}");
    }

    let bad = streamcert(&["fk", "--k", "2", "--prover", "wrong-answer"], Some(&path));
    assert_eq!(bad.status.code(), Some(2));

    assert_eq!(streamcert(&["fk", "--k", "2"], None).status.code(), Some(1));
    assert_eq!(streamcert(&["fk", "--k", "2", "--prover", "nobody"], Some(&path)).status.code(), Some(1));
    assert_eq!(streamcert(&["--help"], None).status.code(), Some(0));
}

#[test]
fn witness_files_and_tsv() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.txt");
    std::fs::write(&g, "# vertices=4\n0 1 1\n1 2 1\n2 3 1\n0 3 1\n").unwrap();
    let w = dir.path().join("w.txt");
    std::fs::write(&w, "0 1\n2 3\n").unwrap();
    let out = streamcert(&["matching", "--witness-file", w.to_str().unwrap(), "--report", "tsv"], Some(&g));
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().nth(1).unwrap().starts_with("matching\taccepted"));
    // the 4-cycle is bipartite
    assert_eq!(streamcert(&["oddcycle"], Some(&g)).status.code(), Some(2));
}

use std::path::{Path, PathBuf};
use std::process::Command;

fn example(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples").join(name)
}

fn qjudge(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_qjudge")).args(args).output().expect("spawn qjudge");
    (out.status.code().unwrap_or(-1), String::from_utf8(out.stdout).unwrap(), String::from_utf8(out.stderr).unwrap())
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn eval_golden_is_true() {
    let (code, out, _) = qjudge(&["eval", path(&example("ex33.qcsp"))]);
    assert_eq!((code, out.trim()), (0, "true"));
    let (code, out, _) = qjudge(&["eval", path(&example("false2.qcsp"))]);
    assert_eq!((code, out.trim()), (0, "false"));
}

#[test]
fn check_golden_derivation() {
    let (code, out, _) = qjudge(&["check", "--proof", path(&example("ex33.jpf")), path(&example("ex33.qcsp"))]);
    assert_eq!(code, 0, "{out}");
    assert_eq!(out.lines().next(), Some("valid, width=2"));
}

#[test]
fn consistency_of_false_instance() {
    let (code, out, _) = qjudge(&["consistency", "-k", "2", path(&example("false2.qcsp"))]);
    assert_eq!((code, out.trim()), (0, "INCONSISTENT (k=2)"));
    let (_, out, _) = qjudge(&["consistency", "-k", "2", path(&example("ex33.qcsp"))]);
    assert_eq!(out.trim(), "CONSISTENT (k=2)");
}

#[test]
fn consistency_dumps_table_and_refutation() {
    let (code, out, _) = qjudge(&["consistency", "-k", "2", "--table", "--refutation", path(&example("false2.qcsp"))]);
    assert_eq!(code, 0);
    assert!(out.lines().any(|l| l.starts_with("3 [x,y] : ")), "{out}");
    assert!(out.contains("qjudge-proof qcsp"), "{out}");
}

#[test]
fn prove_then_check_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let proof = dir.path().join("p.jpf");
    let (code, out, _) = qjudge(&["prove", path(&example("false2.qcsp")), "--out", path(&proof)]);
    assert_eq!(code, 0, "{out}");
    let (code, out, _) = qjudge(&["check", "--proof", path(&proof), path(&example("false2.qcsp"))]);
    assert_eq!(code, 0);
    assert!(out.contains("refutes=true"), "{out}");
}

#[test]
fn prove_true_instance_is_a_violation() {
    let (code, out, _) = qjudge(&["prove", path(&example("ex33.qcsp"))]);
    assert_eq!(code, 2);
    assert!(out.starts_with("true"));
}

#[test]
fn hash_mismatch_is_a_check_error() {
    let (code, out, _) = qjudge(&["check", "--proof", path(&example("ex33.jpf")), path(&example("false2.qcsp"))]);
    assert_eq!(code, 2);
    assert!(out.starts_with("hash mismatch"), "{out}");
}

#[test]
fn tampered_proof_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(example("ex33.jpf")).unwrap();
    let bad = dir.path().join("bad.jpf");
    std::fs::write(&bad, text.replace("rows={(a)}", "rows={(b)}")).unwrap();
    let (code, out, _) = qjudge(&["--json", "check", "--proof", path(&bad), path(&example("ex33.qcsp"))]);
    assert_eq!(code, 2);
    let j: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(j["valid"], false);
    assert!(!j["violations"].as_array().unwrap().is_empty());
}

#[test]
fn malformed_input_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("bad.qcsp");
    std::fs::write(&f, "SORTS\ne\nFORMULA\n").unwrap();
    let (code, _, err) = qjudge(&["eval", path(&f)]);
    assert_eq!(code, 1);
    assert!(err.contains("line 3"), "{err}");
    let (code, out, _) = qjudge(&["--json", "eval", path(&dir.path().join("missing"))]);
    assert_eq!(code, 1);
    assert!(out.contains("\"error\":\"input\""));
}

#[test]
fn refute_trace_and_compile() {
    let dir = tempfile::tempdir().unwrap();
    let qbf = example("qbf.qcbf");
    let (code, trace, _) = qjudge(&["refute", path(&qbf)]);
    assert_eq!(code, 0);
    let t = dir.path().join("t.trace");
    std::fs::write(&t, &trace).unwrap();
    let (code, out, _) = qjudge(&["trace", path(&qbf), path(&t), "--compile"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("valid trace, nodes=2"), "{out}");
    assert!(out.contains("forall-remove"));
    let (code, _, _) = qjudge(&["refute", "--policy", "random:7", path(&qbf)]);
    assert_eq!(code, 0);
    let (code, out, _) = qjudge(&["refute", path(&example("nonprenex.qcbf"))]);
    assert_eq!((code, out.trim()), (2, "true: no falsity trace"));
}

#[test]
fn refute_step_limit_exits_three() {
    let (code, _, err) = qjudge(&["refute", "--max-steps", "0", path(&example("qbf.qcbf"))]);
    assert_eq!(code, 3, "{err}");
}

#[test]
fn bad_policy_is_rejected() {
    let (code, _, _) = qjudge(&["refute", "--policy", "greedy", path(&example("qbf.qcbf"))]);
    assert_eq!(code, 1);
}

#[test]
fn simqres_derives_empty_clause() {
    let qbf = example("qbf.qcbf");
    let (code, out, _) = qjudge(&["simqres", path(&qbf)]);
    assert_eq!(code, 0);
    assert!(out.trim_end().ends_with("clause=()"), "{out}");
    let (code, out, _) = qjudge(&["simqres", "--target", "x,y", path(&qbf)]);
    assert_eq!(code, 2, "{out}");
    let (code, _, _) = qjudge(&["simqres", "--max-clauses", "1", path(&qbf)]);
    assert_eq!(code, 3);
    let (code, _, _) = qjudge(&["simqres", path(&example("nonprenex.qcbf"))]);
    assert_eq!(code, 1);
}

#[test]
fn translate_and_convert_agree() {
    let dir = tempfile::tempdir().unwrap();
    let qbf = example("qbf.qcbf");
    let (_, inst, _) = qjudge(&["translate", path(&qbf)]);
    let inst_file = dir.path().join("t.qcsp");
    std::fs::write(&inst_file, &inst).unwrap();
    let (_, clause_proof, _) = qjudge(&["simqres", path(&qbf)]);
    let cp = dir.path().join("c.qpf");
    std::fs::write(&cp, &clause_proof).unwrap();

    let (code, jp_text, _) = qjudge(&["convert", path(&qbf), "--input", path(&cp), "--to", "qcsp"]);
    assert_eq!(code, 0);
    let jp = dir.path().join("j.jpf");
    std::fs::write(&jp, &jp_text).unwrap();
    for target in [&inst_file, &qbf] {
        let (code, out, _) = qjudge(&["check", "--proof", path(&jp), path(target)]);
        assert_eq!(code, 0, "{out}");
        assert!(out.contains("refutes=true"));
    }

    let (code, back, _) = qjudge(&["convert", path(&qbf), "--input", path(&jp), "--to", "qcbf"]);
    assert_eq!(code, 0);
    let back_file = dir.path().join("b.qpf");
    std::fs::write(&back_file, &back).unwrap();
    let (code, _, _) = qjudge(&["check", "--proof", path(&back_file), path(&qbf)]);
    assert_eq!(code, 0);

    let (code, trace, _) = qjudge(&["convert", path(&qbf), "--input", path(&cp), "--to", "trace"]);
    assert_eq!(code, 0, "{trace}");
    let tf = dir.path().join("x.trace");
    std::fs::write(&tf, &trace).unwrap();
    let (code, _, _) = qjudge(&["trace", path(&qbf), path(&tf)]);
    assert_eq!(code, 0);
    let (code, _, _) = qjudge(&["convert", path(&qbf), "--input", path(&tf), "--to", "trace"]);
    assert_eq!(code, 1);
}

#[test]
fn json_output_parses() {
    let (_, out, _) = qjudge(&["--json", "consistency", "-k", "2", path(&example("false2.qcsp"))]);
    let j: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(j["consistent"], false);
    assert_eq!(j["k"], 2);
    let (_, out, _) = qjudge(&["--json", "eval", path(&example("ex33.qcsp"))]);
    assert_eq!(serde_json::from_str::<serde_json::Value>(&out).unwrap()["truth"], true);
}

use std::process::Command;

fn symann() -> Command {
    Command::new(env!("CARGO_BIN_EXE_symann"))
}

#[test]
fn unknown_suite_exits_with_usage_code() {
    let st = symann().args(["verify", "no-such-suite"]).output().unwrap();
    assert_eq!(st.status.code(), Some(2));
}

#[test]
fn named_suite_passes() {
    let st = symann().args(["verify", "topk-identity"]).output().unwrap();
    assert_eq!(st.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&st.stdout).unwrap();
    assert_eq!(v["passed"], true);
}

#[test]
fn failed_assertion_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "version = 1\n[assertions]\nmin_recall = 1.5\n").unwrap();
    let st = symann()
        .args(["bench", "--n", "200", "--queries", "10", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(1));
    let st = symann().args(["bench", "--n", "200", "--queries", "10", "--version-typo"]).output().unwrap();
    assert_eq!(st.status.code(), Some(2));
}

#[test]
fn gen_build_query_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let wl = dir.path().join("wl");
    let emb = dir.path().join("emb.bin");
    let json = dir.path().join("r.json");
    let common = ["--d", "6", "--norm", "minimal-sqrt", "--separation", "4"];
    let ok = |c: &mut Command| assert_eq!(c.output().unwrap().status.code(), Some(0));
    ok(symann().args(["gen", "--n", "300", "--queries", "20"]).args(common).arg("--out-dir").arg(&wl));
    ok(symann().arg("build").args(common).arg("--out").arg(&emb));
    ok(symann()
        .args(["query", "--index", "symnorm_direct", "--accept-factor", "4"])
        .args(common)
        .arg("--workload")
        .arg(&wl)
        .arg("--embedding")
        .arg(&emb)
        .arg("--json")
        .arg(&json));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(v["queries"], 20);
    assert!(v["recall"]["mean"].as_f64().unwrap() >= 0.9);
}

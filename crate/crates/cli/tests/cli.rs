use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn chaingraph(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chaingraph"))
        .args(args)
        .output()
        .expect("run chaingraph")
}

fn ok(args: &[&str]) -> String {
    let out = chaingraph(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn stderr_line(out: &Output) -> String {
    let text = String::from_utf8_lossy(&out.stderr).to_string();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1, "expected one error line, got {text:?}");
    lines[0].to_string()
}

#[test]
fn analyze_is_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    ok(&["synth", "--archetype", "supernode-spike", "--months", "9", "--spike-index", "4", "--baseline", "200", "--seed", "3", "--out", p(&corpus)]);
    let traces = corpus.join("traces.jsonl");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        ok(&["analyze", "-i", p(&traces), "--out", p(out)]);
        ok(&["report", "--out", p(out)]);
    }
    for f in ["metrics.csv", "outliers.json", "spam.json", "family_tree.csv", "report/alpha.csv", "report/trace_counts.csv"] {
        let x = fs::read(a.join(f)).unwrap();
        assert!(!x.is_empty(), "{f}");
        assert_eq!(x, fs::read(b.join(f)).unwrap(), "{f} differs between runs");
    }
    let outliers = fs::read_to_string(a.join("outliers.json")).unwrap();
    assert!(outliers.contains("\"hub00\""));
}

#[test]
fn ingest_strict_and_lenient() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("raw.jsonl");
    let good = r#"{"tx_id":"t1","timestamp":1300000000,"inputs":[{"pubkey":"k1","amount":"5"},{"pubkey":"k2","amount":"3"}],"outputs":[{"pubkey":"k3","amount":"7"},{"pubkey":"k4","amount":"1"}]}"#;
    fs::write(&raw, format!("{good}\nnot json\n")).unwrap();
    let out_dir = dir.path().join("o");

    let out = chaingraph(&["ingest", "--chain", "btc", "-i", p(&raw), "--out", p(&out_dir)]);
    assert_eq!(out.status.code(), Some(2));
    let line = stderr_line(&out);
    assert!(line.starts_with("E_PARSE: "), "{line}");
    assert!(line.contains(":2:"), "line number missing: {line}");

    let summary = ok(&["ingest", "--chain", "btc", "-i", p(&raw), "--out", p(&out_dir), "--lenient"]);
    let v: serde_json::Value = serde_json::from_str(&summary).unwrap();
    assert_eq!(v["records_skipped"], 1);
    assert_eq!(v["traces"], 4);
}

#[test]
fn empty_input_gives_zero_summary() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("empty.jsonl");
    fs::write(&raw, "").unwrap();
    let summary = ok(&["ingest", "--chain", "eos", "-i", p(&raw), "--out", p(dir.path())]);
    let v: serde_json::Value = serde_json::from_str(&summary).unwrap();
    assert_eq!(v["records_read"], 0);
    assert_eq!(v["traces"], 0);
    assert_eq!(fs::read_to_string(dir.path().join("traces.jsonl")).unwrap(), "");
}

#[test]
fn bitcoin_corpus_has_no_mtg_scc_rows() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["synth", "--archetype", "utxo", "--txs", "300", "--months", "2", "--out", p(dir.path())]);
    let ingested = dir.path().join("ingested");
    ok(&["ingest", "--chain", "btc", "-i", p(&dir.path().join("raw.jsonl")), "--out", p(&ingested)]);
    ok(&["analyze", "--out", p(&ingested)]);
    let metrics = fs::read_to_string(ingested.join("metrics.csv")).unwrap();
    assert!(metrics.contains("btc,MTG,wcc,2019-01,"));
    assert!(!metrics.contains(",scc,"));
}

#[test]
fn spam_scan_flags_planted_campaigns() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["synth", "--archetype", "spam-campaign", "--spammers", "3", "--benign", "1000", "--out", p(dir.path())]);
    let out = ok(&["spam-scan", "--out", p(dir.path())]);
    assert_eq!(out.trim(), r#"{"flagged":3}"#);
    let strict = ok(&["spam-scan", "--out", p(dir.path()), "--spam-z", "700"]);
    assert_eq!(strict.trim(), r#"{"flagged":0}"#);
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["synth", "--archetype", "spam-campaign", "--spammers", "2", "--out", p(dir.path())]);
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, format!("# thresholds\nout = {}\nspam_z = 700\n", p(dir.path()))).unwrap();
    assert_eq!(ok(&["spam-scan", "--config", p(&cfg)]).trim(), r#"{"flagged":0}"#);
    assert_eq!(
        ok(&["spam-scan", "--config", p(&cfg), "--spam-z", "500"]).trim(),
        r#"{"flagged":2}"#
    );
}

#[test]
fn input_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.jsonl");
    let out = chaingraph(&["analyze", "-i", p(&missing), "--out", p(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_line(&out).starts_with("E_IO: "));

    let out = chaingraph(&["analyze", "--from", "2019-13", "--out", p(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_line(&out).starts_with("E_MONTH: "));

    let out = chaingraph(&["analyze", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_line(&out).starts_with("E_USAGE: "));

    let out = chaingraph(&["synth", "--archetype", "power-law", "--n", "50", "--out", p(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_line(&out).starts_with("E_PARAM: "));
}

#[test]
fn analysis_errors_exit_one() {
    // an account created twice breaks the account-creation graph invariant
    let dir = tempfile::tempdir().unwrap();
    let line = |src: &str, tx: &str| {
        format!(
            r#"{{"chain":"eos","kind":"account_creation","source":"{src}","source_class":"regular","target":"dup","target_class":"regular","weight":"1","timestamp":1550000000,"initiator_role":"user","tx_id":"{tx}","ordinal":0}}"#
        )
    };
    fs::write(dir.path().join("traces.jsonl"), format!("{}\n{}\n", line("a", "t1"), line("b", "t2"))).unwrap();
    let out = chaingraph(&["analyze", "--out", p(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_line(&out).starts_with("E_DATA: "));
}

#[test]
fn report_without_analysis_rows() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("traces.jsonl"), "").unwrap();
    ok(&["analyze", "--out", p(dir.path())]);
    ok(&["report", "--out", p(dir.path())]);
    let text = fs::read_to_string(dir.path().join("report/role_splits.csv")).unwrap();
    assert_eq!(text, "series,month,value\n");
}

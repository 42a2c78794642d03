use std::io::Write;
use std::net::TcpListener;
use std::path::Path;
use std::process::{Command, Output, Stdio};
use std::sync::Arc;

use r2c_core::scorer::LexicalScorer;
use r2c_core::tokenize::WhitespaceCounter;
use r2c_core::{CompressionConfig, Compressor, OutputOrder, Prompt};
use serde_json::Value;

fn r2c(args: &[&str], stdin: &str, envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_r2c"));
    cmd.args(args)
        .env_remove("R2C_SCORER_ENDPOINT")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped());
    for (k, v) in envs {
        cmd.env(k, v);
    }
    let mut child = cmd.spawn().unwrap();
    let _ = child.stdin.take().unwrap().write_all(stdin.as_bytes());
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn long_context() -> String {
    (0..40)
        .map(|p| {
            (0..5)
                .map(|s| format!("Paragraph {p} sentence {s} mentions the river delta and the town of Norwich."))
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect::<Vec<_>>()
        .join("\n\n")
}

fn nq_line(id: usize, passages: usize) -> String {
    let ctxs: Vec<Value> = (0..passages)
        .map(|i| {
            serde_json::json!({
                "title": format!("Title {i}"),
                "text": format!("Passage {i} about record {id}. It covers climate, trade and the old harbour in some detail. Linda Davis was mentioned once."),
            })
        })
        .collect();
    serde_json::json!({
        "id": format!("q{id}"),
        "question": "who was mentioned in the passage",
        "answers": ["Linda Davis"],
        "ctxs": ctxs,
    })
    .to_string()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn under_target_is_echoed_verbatim() {
    let text = "A short context.\n\n  With odd   spacing\tand a tab.\n";
    let out = r2c(&["compress", "--target-tokens", "1000", "--tokenizer", "whitespace"], text, &[]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(stdout(&out), text);
}

#[test]
fn rho_out_of_range_is_usage_error() {
    let out = r2c(&["compress", "--rho", "1.5"], "text", &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("rho"));
}

#[test]
fn config_file_rho_out_of_range_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "r2c.toml", "rho = 1.5\n");
    let out = r2c(&["--config", &cfg, "compress"], "text", &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_config_key_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "r2c.toml", "rhoo = 0.5\n");
    let out = r2c(&["--config", &cfg, "compress"], "text", &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn output_matches_library() {
    let ctx = long_context();
    let out = r2c(
        &["compress", "--target-tokens", "300", "--tokenizer", "whitespace", "--question", "where is Norwich"],
        &ctx,
        &[],
    );
    assert!(out.status.success(), "{}", stderr(&out));

    let comp = Compressor::new(CompressionConfig::with_target(300), Arc::new(WhitespaceCounter)).unwrap();
    let expected = comp
        .compress(&Prompt::new(ctx.clone()).with_question("where is Norwich"), &LexicalScorer::default())
        .unwrap();
    assert!(!expected.flags.noop);
    assert_eq!(stdout(&out), format!("{}\n", expected.compressed_context));
}

#[test]
fn nq_record_reaches_target() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "nq.jsonl", &format!("{}\n", nq_line(1, 40)));
    let out = r2c(
        &["compress", "--input", &data, "--input-format", "nq", "--target-tokens", "500", "--audit"],
        "",
        &[],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let line: Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(line["id"], "q1");
    assert!(line["original_tokens"].as_u64().unwrap() > 500);
    assert!(line["output_tokens"].as_u64().unwrap() >= 500);
    assert!(line["prompt"].as_str().unwrap().contains("who was mentioned"));

    let audit: Value = serde_json::from_str(stderr(&out).lines().last().unwrap()).unwrap();
    assert_eq!(audit["effective"]["config"]["target_tokens"], 500);
    assert_eq!(audit["effective"]["sources"]["target_tokens"], "flag");
    assert_eq!(audit["effective"]["sources"]["ordering"], "default");
    assert_eq!(audit["result"]["config"]["ordering"], serde_json::to_value(OutputOrder::Sorted).unwrap());
}

#[test]
fn precedence_is_flag_env_file_default() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "r2c.toml",
        "target_tokens = 50\nrho = 0.25\ngamma = 2.0\nendpoint = \"http://file:1\"\ntokenizer = \"whitespace\"\n",
    );
    let audit = dir.path().join("audit.jsonl");
    let out = r2c(
        &[
            "--config",
            &cfg,
            "compress",
            "--rho",
            "0.75",
            "--audit-file",
            audit.to_str().unwrap(),
        ],
        &long_context(),
        &[("R2C_SCORER_ENDPOINT", "http://env:2")],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let entry: Value = serde_json::from_str(std::fs::read_to_string(&audit).unwrap().trim()).unwrap();
    let eff = &entry["effective"];
    assert_eq!(eff["config"]["rho"], 0.75);
    assert_eq!(eff["config"]["target_tokens"], 50);
    assert_eq!(eff["config"]["gamma"], 2.0);
    assert_eq!(eff["endpoint"], "http://env:2");
    assert_eq!(eff["tokenizer"], "whitespace");
    assert_eq!(eff["scorer"], "lexical");
    assert_eq!(eff["sources"]["rho"], "flag");
    assert_eq!(eff["sources"]["endpoint"], "env");
    assert_eq!(eff["sources"]["gamma"], "file");
    assert_eq!(eff["sources"]["pooling"], "default");
    assert_eq!(entry["result"]["config"]["rho"], 0.75);
}

#[test]
fn remote_without_endpoint_is_usage_error() {
    let out = r2c(&["compress", "--scorer", "remote"], "text", &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("R2C_SCORER_ENDPOINT"));
}

#[test]
fn unreachable_scorer_fails_with_transport_diagnostic() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let endpoint = format!("http://127.0.0.1:{port}");
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "r2c.toml", "max_retries = 0\ntimeout_secs = 2\n");
    let out = r2c(
        &["--config", &cfg, "compress", "--scorer", &format!("remote:{endpoint}"), "--target-tokens", "10"],
        &long_context(),
        &[],
    );
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains(&endpoint), "{err}");
    assert!(err.contains("attempt"), "{err}");

    let data = write(dir.path(), "nq.jsonl", &format!("{}\n", nq_line(1, 3)));
    let out = r2c(
        &["--config", &cfg, "evaluate", "--dataset", &data, "--format", "nq", "--scorer", "remote"],
        "",
        &[("R2C_SCORER_ENDPOINT", &endpoint)],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains(&endpoint));
}

#[test]
fn empty_dataset_gives_empty_report() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "empty.jsonl", "");
    let stem = dir.path().join("rep");
    let out = r2c(
        &["evaluate", "--dataset", &data, "--format", "nq", "--report", stem.to_str().unwrap()],
        "",
        &[],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("records: 0 (0 failed)"));
    let csv = std::fs::read_to_string(stem.with_extension("csv")).unwrap();
    assert_eq!(csv.lines().count(), 1);
    assert!(csv.starts_with("id,"));
    let json: Value = serde_json::from_str(&std::fs::read_to_string(stem.with_extension("json")).unwrap()).unwrap();
    assert_eq!(json["aggregates"]["records"], 0);
}

#[test]
fn evaluate_writes_report_with_span_em() {
    let dir = tempfile::tempdir().unwrap();
    let lines: Vec<String> = (0..6).map(|i| nq_line(i, 20)).collect();
    let data = write(dir.path(), "nq.jsonl", &(lines.join("\n") + "\n\nnot json\n"));
    let stem = dir.path().join("rep");
    let out = r2c(
        &[
            "evaluate",
            "--dataset",
            &data,
            "--format",
            "nq",
            "--scorer",
            "uniform",
            "--tokenizer",
            "whitespace",
            "--target-tokens",
            "200",
            "--jobs",
            "3",
            "--generator-reply",
            "It was Linda Davis.",
            "--report",
            stem.to_str().unwrap(),
        ],
        "",
        &[],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stderr(&out).contains("skipped"));
    let text = stdout(&out);
    assert!(text.contains("records: 6 (0 failed)"), "{text}");
    assert!(text.contains("span em: 1.0000 over 6 records"), "{text}");

    let rdr = csv_rows(&stem.with_extension("csv"));
    assert_eq!(rdr.len(), 6);
    let ids: Vec<String> = rdr.iter().map(|r| r[0].clone()).collect();
    assert_eq!(ids, ["q0", "q1", "q2", "q3", "q4", "q5"]);
    for r in &rdr {
        let output: usize = r[5].parse().unwrap();
        assert!(output >= 200);
    }
}

#[test]
fn strict_evaluate_fails_on_bad_row() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "nq.jsonl", &format!("{}\n{{\"question\": 1}}\n", nq_line(0, 2)));
    let out = r2c(&["evaluate", "--dataset", &data, "--format", "nq", "--strict", "--report", dir.path().join("r").to_str().unwrap()], "", &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("nq.jsonl:2:"), "{}", stderr(&out));
}

#[test]
fn bad_format_and_ablation_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "nq.jsonl", "");
    let out = r2c(&["evaluate", "--dataset", &data, "--format", "squad"], "", &[]);
    assert_eq!(out.status.code(), Some(2));
    let out = r2c(&["evaluate", "--dataset", &data, "--format", "nq", "--ablation", "words"], "", &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn score_reports_spans() {
    let out = r2c(
        &["score", "--tokenizer", "whitespace", "--question", "river delta"],
        "The river delta floods. Towns sit on stilts.",
        &[],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["scorer"], "lexical");
    let chunk = &v["chunks"][0];
    assert_eq!(chunk["sentences"].as_array().unwrap().len(), 2);
    let words: Vec<&str> = chunk["spans"].as_array().unwrap().iter().map(|s| s["text"].as_str().unwrap()).collect();
    assert!(words.contains(&"river"));
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

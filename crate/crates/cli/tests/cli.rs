use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn minmaxage(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_minmaxage")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = minmaxage(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// synth, build-data, train sentfinder/qa, extract; returns the work dir layout.
fn run_all(dir: &Path, jobs: &str) {
    ok(&["synth", "--out", p(dir), "--records", "600", "--articles", "8"]);
    ok(&["build-data", "--registry", p(&dir.join("registry.jsonl")), "--out", p(&dir.join("data"))]);
    for model in ["sentfinder", "qa"] {
        ok(&["train", model, "--data", p(&dir.join("data")), "--models", p(&dir.join("models"))]);
    }
    ok(&[
        "extract",
        "--docs",
        p(&dir.join("articles.jsonl")),
        "--models",
        p(&dir.join("models")),
        "--out",
        p(&dir.join("pred.jsonl")),
        "--jobs",
        jobs,
    ]);
}

#[test]
fn end_to_end_commands() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    run_all(dir, "2");
    let preds = fs::read_to_string(dir.join("pred.jsonl")).unwrap();
    assert_eq!(preds.lines().count(), 8);
    assert!(preds.starts_with("{\"id\":\"SYN-01\""));

    let gold = p(&dir.join("gold.csv")).to_string();
    let json = ok(&["evaluate", "--pred", p(&dir.join("pred.jsonl")), "--gold", &gold, "--json"]);
    let metrics: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(metrics["min"]["annotated"], 8);
    let table = ok(&["evaluate", "--pred", p(&dir.join("pred.jsonl")), "--gold", &gold]);
    assert!(table.contains("f-score"));

    ok(&["train", "crf", "--data", p(&dir.join("data")), "--models", p(&dir.join("models")), "--max-epochs", "20"]);
    let docs = p(&dir.join("articles.jsonl")).to_string();
    let models = p(&dir.join("models")).to_string();
    ok(&["baseline", "crf", "--docs", &docs, "--models", &models, "--out", p(&dir.join("crf.jsonl"))]);
    ok(&["baseline", "passage", "--docs", &docs, "--out", p(&dir.join("passage.jsonl"))]);
    for f in ["crf.jsonl", "passage.jsonl"] {
        ok(&["evaluate", "--pred", p(&dir.join(f)), "--gold", &gold]);
    }

    let ablation = ok(&["ablate", "--docs", &docs, "--models", &models, "--gold", &gold]);
    for system in ["full", "no_sentfinder", "no_qa", "no_filter"] {
        assert!(ablation.contains(system), "{ablation}");
    }
    let stats = ok(&["stats", "--docs", &docs, "--json"]);
    let stats: serde_json::Value = serde_json::from_str(&stats).unwrap();
    assert_eq!(stats["articles"], 8);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_all(a.path(), "1");
    run_all(b.path(), "4");
    for f in [
        "registry.jsonl",
        "articles.jsonl",
        "gold.csv",
        "data/sentfinder.jsonl",
        "data/bio-min.jsonl",
        "data/bio-max.jsonl",
        "data/qa.jsonl",
        "models/sentfinder.model",
        "models/qa.model",
        "pred.jsonl",
    ] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f} differs");
    }
}

#[test]
fn missing_prediction_file_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let gold = tmp.path().join("gold.csv");
    fs::write(&gold, "doc_id,min_age,max_age\nA,18,65\n").unwrap();
    let out = minmaxage(&["evaluate", "--pred", "missing.jsonl", "--gold", p(&gold)]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("missing.jsonl") && err.contains("No such file"), "{err}");
}

#[test]
fn bad_inputs_fail_with_diagnostics() {
    let tmp = tempfile::tempdir().unwrap();
    let out = minmaxage(&["evaluate", "--bogus"]);
    assert!(!out.status.success());

    let gold = tmp.path().join("gold.csv");
    fs::write(&gold, "id,min,max\n").unwrap();
    let pred = tmp.path().join("pred.jsonl");
    fs::write(&pred, "").unwrap();
    let out = minmaxage(&["evaluate", "--pred", p(&pred), "--gold", p(&gold)]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("gold.csv"));

    let out = minmaxage(&["extract", "--docs", p(tmp.path()), "--models", p(tmp.path()), "--out", "x", "--ablate", "no_such"]);
    assert!(!out.status.success());

    let docs = tmp.path().join("doc.json");
    fs::write(&docs, "{\"id\": 3, \"sections\": []}").unwrap();
    let out = minmaxage(&["stats", "--docs", p(&docs)]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("id"));

    let out = minmaxage(&["extract", "--docs", p(&docs), "--models", p(tmp.path()), "--out", "x", "--threshold", "1.5"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("threshold"));
}

#[test]
fn plain_text_directory_is_loaded_in_name_order() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("b.txt"), "Methods\nParticipants aged 18-23 years were enrolled.\n").unwrap();
    fs::write(tmp.path().join("a.txt"), "No headings here at all.\n").unwrap();
    let out = ok(&["baseline", "passage", "--docs", p(tmp.path()), "--out", p(&tmp.path().join("out/p.jsonl"))]);
    assert!(out.is_empty());
    let preds = fs::read_to_string(tmp.path().join("out/p.jsonl")).unwrap();
    let ids: Vec<String> = preds
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["id"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(ids, ["a", "b"]);
}

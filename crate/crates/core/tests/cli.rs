mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use asap::corpus::Language;
use serde_json::Value;

fn asap(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_asap"))
        .current_dir(dir)
        .env_remove("OPENAI_API_KEY")
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(out: Output) -> String {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    common::write_pool(&asap::synth::pool(Language::Java, 40, 6), &dir.path().join("java.jsonl"));
    common::write_pool(&asap::synth::pool(Language::Python, 20, 6), &dir.path().join("py.jsonl"));
    dir
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

#[test]
fn index_then_summarize_and_compare() {
    let dir = setup();
    let d = dir.path();
    let out = ok(asap(d, &["index", "--pool", "java.jsonl", "--language", "java", "--out", "idx.json"]));
    assert!(out.contains("indexed 40 documents"));

    let run = |components: &str, out_dir: &str| {
        ok(asap(
            d,
            &[
                "summarize",
                "--set",
                "test_pool=java.jsonl",
                "--set",
                "language=java",
                "--set",
                "retrieval.index_path=idx.json",
                "--set",
                &format!("components={components}"),
                "--set",
                "selection.n=15",
                "--set",
                "cache_dir=cache",
                "--out",
                out_dir,
            ],
        ))
    };
    let stdout = run("all", "asap");
    assert!(stdout.contains("15 samples: 15 ok"), "{stdout}");
    run("none", "bm25");

    let report = json(&d.join("asap/report.json"));
    assert_eq!(report["samples"], 15);
    assert_eq!(report["backend"], "mock");
    assert_eq!(report["config"]["components"], "repo,id,dfg");
    let csv = fs::read_to_string(d.join("asap/aggregates.csv")).unwrap();
    assert!(csv.starts_with("metric,mean,n\nbleu_cn,"));
    assert_eq!(fs::read_to_string(d.join("asap/records.jsonl")).unwrap().lines().count(), 15);
    assert!(fs::read_dir(d.join("cache")).unwrap().count() >= 15);

    let cmp = ok(asap(
        d,
        &["compare", "--baseline", "bm25/records.jsonl", "--treatment", "asap/records.jsonl", "--out", "cmp.json"],
    ));
    assert!(cmp.is_empty());
    let cmp = json(&d.join("cmp.json"));
    assert_eq!(cmp["comparisons"].as_array().unwrap().len(), 4);
    assert_eq!(cmp["comparisons"][0]["n_pairs"], 15);
}

#[test]
fn completion_and_scoring() {
    let dir = setup();
    let d = dir.path();
    let stdout = ok(asap(
        d,
        &["complete", "--set", "test_pool=py.jsonl", "--set", "language=python", "--set", "line_seed=3", "--out", "c"],
    ));
    assert!(stdout.contains("em"), "{stdout}");
    let first: Value =
        serde_json::from_str(fs::read_to_string(d.join("c/records.jsonl")).unwrap().lines().next().unwrap()).unwrap();
    assert!(first["target_line"].as_u64().unwrap() >= 1);

    fs::write(
        d.join("pred.jsonl"),
        "{\"id\": \"a\", \"prediction\": \"Returns the sum.\"}\n{\"id\": \"b\", \"prediction\": \"x\"}\n",
    )
    .unwrap();
    fs::write(
        d.join("ref.jsonl"),
        "{\"id\": \"b\", \"reference\": \"Adds one.\"}\n{\"id\": \"a\", \"reference\": \"Returns the sum.\"}\n",
    )
    .unwrap();
    let stdout =
        ok(asap(d, &["score", "--predictions", "pred.jsonl", "--references", "ref.jsonl", "--csv", "scores.csv"]));
    let agg: Value = serde_json::from_str(&stdout).unwrap();
    assert!((agg["rouge_l"].as_f64().unwrap() - 50.0).abs() < 1e-9);
    let csv = fs::read_to_string(d.join("scores.csv")).unwrap();
    assert!(csv.starts_with("id,bleu_cn,bleu_dc,rouge_l,meteor\na,"), "{csv}");

    let stdout =
        ok(asap(d, &["score", "--task", "complete", "--predictions", "pred.jsonl", "--references", "ref.jsonl"]));
    let agg: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(agg["em"], 50.0);
}

#[test]
fn ablation_writes_a_run_per_variant() {
    let dir = setup();
    let d = dir.path();
    let stdout = ok(asap(
        d,
        &[
            "ablate",
            "--set",
            "test_pool=java.jsonl",
            "--set",
            "language=java",
            "--set",
            "selection.n=10",
            "--variants",
            "all,-dfg,none",
            "--out",
            "abl",
        ],
    ));
    assert!(stdout.contains("-dfg"), "{stdout}");
    for sub in ["all", "without-dfg", "none"] {
        assert!(d.join("abl").join(sub).join("report.json").exists(), "{sub}");
    }
    let report = json(&d.join("abl/ablation.json"));
    assert_eq!(report["reference"], "all");
    assert_eq!(report["rows"].as_array().unwrap().len(), 3);
    assert_eq!(report["comparisons"].as_array().unwrap().len(), 8);
}

#[test]
fn errors_exit_non_zero() {
    let dir = setup();
    let d = dir.path();
    let bad = asap(d, &["summarize", "--set", "test_pool=missing.jsonl"]);
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("missing.jsonl"));

    let bad = asap(d, &["summarize", "--set", "workers=0", "--set", "test_pool=java.jsonl"]);
    assert!(!bad.status.success());

    // A snapshot built over another pool is refused.
    ok(asap(d, &["index", "--pool", "py.jsonl", "--language", "python", "--out", "py_idx.json"]));
    let bad = asap(
        d,
        &[
            "summarize",
            "--set",
            "test_pool=java.jsonl",
            "--set",
            "language=java",
            "--set",
            "retrieval.index_path=py_idx.json",
        ],
    );
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("exemplar pool"));
}

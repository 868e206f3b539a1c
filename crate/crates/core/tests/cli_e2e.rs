//! End-to-end coverage of every CLI subcommand over the fixture corpus.

mod common;

use std::path::Path;
use std::process::Output;

use common::{build_corpus_root, gold_by_question, StubServer, CORPUS};

fn nl2sql(dir: &Path, args: &[&str]) -> Output {
    std::process::Command::new(env!("CARGO_BIN_EXE_nl2sql"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn run_ok(dir: &Path, args: &[&str]) -> String {
    let output = nl2sql(dir, args);
    assert!(
        output.status.success(),
        "command {:?} failed:\nstdout: {}\nstderr: {}",
        args,
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("reading {name}: {e}"))
}

fn line_count(dir: &Path, name: &str) -> usize {
    read(dir, name).lines().count()
}

#[test]
fn full_pipeline_through_the_cli() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    build_corpus_root(dir);

    // score
    let stdout = run_ok(
        dir,
        &["score", "--in", "examples.json", "--out", "scored.jsonl"],
    );
    assert!(stdout.contains("| Difficulty | Query Count | Complexity Score Range | Median Score |"));
    assert!(stdout.contains("scored: 30  skipped: 0"));
    assert_eq!(line_count(dir, "scored.jsonl"), 30);
    assert_eq!(line_count(dir, "scored.jsonl.skipped.jsonl"), 0);

    // curate (twice: determinism)
    let curate_args = [
        "curate",
        "--in",
        "scored.jsonl",
        "--total",
        "10",
        "--hard",
        "0.4",
        "--medium",
        "0.5",
        "--easy",
        "0.1",
        "--seed",
        "7",
    ];
    run_ok(
        dir,
        &[&curate_args[..], &["--out", "curated.jsonl"]].concat(),
    );
    run_ok(
        dir,
        &[&curate_args[..], &["--out", "curated2.jsonl"]].concat(),
    );
    assert_eq!(read(dir, "curated.jsonl"), read(dir, "curated2.jsonl"));
    assert_eq!(
        read(dir, "curated.jsonl.manifest.json"),
        read(dir, "curated2.jsonl.manifest.json")
    );
    assert_eq!(line_count(dir, "curated.jsonl"), 10);
    let manifest: serde_json::Value =
        serde_json::from_str(&read(dir, "curated.jsonl.manifest.json")).unwrap();
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["distribution"]["hard"], 0.4);
    assert_eq!(manifest["bucket_counts"]["hard"], 4);
    assert_eq!(manifest["bucket_counts"]["medium"], 5);
    assert_eq!(manifest["bucket_counts"]["easy"], 1);

    // split
    run_ok(
        dir,
        &[
            "split",
            "--in",
            "curated.jsonl",
            "--train-out",
            "train.jsonl",
            "--val-out",
            "val.jsonl",
            "--train-count",
            "8",
            "--val-count",
            "2",
            "--seed",
            "11",
        ],
    );
    assert_eq!(line_count(dir, "train.jsonl"), 8);
    assert_eq!(line_count(dir, "val.jsonl"), 2);

    // benchmark, disjoint from the curated set
    run_ok(
        dir,
        &[
            "benchmark",
            "--in",
            "scored.jsonl",
            "--exclude",
            "curated.jsonl",
            "--out",
            "bench.jsonl",
            "--total",
            "10",
            "--hard",
            "0.4",
            "--medium",
            "0.5",
            "--easy",
            "0.1",
            "--seed",
            "13",
        ],
    );
    assert_eq!(line_count(dir, "bench.jsonl"), 10);
    let curated_questions: std::collections::HashSet<String> = read(dir, "curated.jsonl")
        .lines()
        .map(|l| {
            serde_json::from_str::<serde_json::Value>(l).unwrap()["question"]
                .as_str()
                .unwrap()
                .to_string()
        })
        .collect();
    for line in read(dir, "bench.jsonl").lines() {
        let q = serde_json::from_str::<serde_json::Value>(line).unwrap()["question"]
            .as_str()
            .unwrap()
            .to_string();
        assert!(!curated_questions.contains(&q), "benchmark leaks {q}");
    }

    // describe (single db and whole catalog)
    run_ok(
        dir,
        &[
            "describe",
            "--tables",
            "tables.json",
            "--db-id",
            "library",
            "--db-root",
            ".",
            "--out",
            "library.txt",
            "--include-samples",
            "--sample-count",
            "2",
        ],
    );
    let described = read(dir, "library.txt");
    assert!(described.starts_with("Table: authors"));
    assert!(described.contains("-- samples: "));
    run_ok(
        dir,
        &[
            "describe",
            "--tables",
            "tables.json",
            "--out",
            "descriptions",
        ],
    );
    assert!(dir.join("descriptions/shop.txt").exists());
    assert!(dir.join("descriptions/customers_and_invoices.txt").exists());

    // infer against a stub that echoes the gold SQL
    let server = StubServer::echo_gold(gold_by_question(CORPUS));
    run_ok(
        dir,
        &[
            "infer",
            "--dataset",
            "bench.jsonl",
            "--tables",
            "tables.json",
            "--db-root",
            ".",
            "--endpoint",
            &server.base_url(),
            "--model",
            "stub",
            "--out",
            "pred.jsonl",
            "--concurrency",
            "3",
            "--mode",
            "cot",
        ],
    );
    assert_eq!(line_count(dir, "pred.jsonl"), 10);
    // Output order equals benchmark order.
    let bench_keys: Vec<u64> = read(dir, "bench.jsonl")
        .lines()
        .map(|l| {
            serde_json::from_str::<serde_json::Value>(l).unwrap()["source_index"]
                .as_u64()
                .unwrap()
        })
        .collect();
    let pred_keys: Vec<u64> = read(dir, "pred.jsonl")
        .lines()
        .map(|l| {
            serde_json::from_str::<serde_json::Value>(l).unwrap()["key"]["source_index"]
                .as_u64()
                .unwrap()
        })
        .collect();
    assert_eq!(bench_keys, pred_keys);

    // evaluate: echoed gold answers score 100%
    let stdout = run_ok(
        dir,
        &[
            "evaluate",
            "--predictions",
            "pred.jsonl",
            "--dataset",
            "bench.jsonl",
            "--db-root",
            ".",
            "--out",
            "report.json",
        ],
    );
    assert!(stdout.contains("accuracy: 100.00%"), "stdout: {stdout}");
    let report: serde_json::Value = serde_json::from_str(&read(dir, "report.json")).unwrap();
    assert_eq!(report["overall"]["correct"], 10);
    assert_eq!(report["failure_count"], 0);

    // build-cot from the teacher outputs, then validate
    run_ok(
        dir,
        &[
            "build-cot",
            "--dataset",
            "bench.jsonl",
            "--predictions",
            "pred.jsonl",
            "--tables",
            "tables.json",
            "--db-root",
            ".",
            "--out",
            "cot.jsonl",
        ],
    );
    assert_eq!(line_count(dir, "cot.jsonl"), 10);
    assert_eq!(line_count(dir, "cot.jsonl.keys.jsonl"), 10);
    assert_eq!(line_count(dir, "cot.jsonl.skipped.jsonl"), 0);
    let first_record: serde_json::Value =
        serde_json::from_str(read(dir, "cot.jsonl").lines().next().unwrap()).unwrap();
    let roles: Vec<&str> = first_record["messages"]
        .as_array()
        .unwrap()
        .iter()
        .map(|m| m["role"].as_str().unwrap())
        .collect();
    assert_eq!(roles, ["system", "user", "assistant"]);

    let stdout = run_ok(
        dir,
        &[
            "validate-cot",
            "--records",
            "cot.jsonl",
            "--dataset",
            "bench.jsonl",
            "--db-root",
            ".",
            "--out",
            "cot_validation.jsonl",
        ],
    );
    assert!(
        stdout.contains("records: 10  structural_ok: 10  execution_match: 10"),
        "stdout: {stdout}"
    );

    // report from a two-run ledger
    let ledger = serde_json::json!({
        "runs": [
            {
                "name": "stub-echo",
                "model": "stub",
                "training_method": "none",
                "dataset": "bench 10",
                "report": "report.json",
                "group": "small"
            }
        ]
    });
    std::fs::write(
        dir.join("ledger.json"),
        serde_json::to_string_pretty(&ledger).unwrap(),
    )
    .unwrap();
    run_ok(
        dir,
        &["report", "--ledger", "ledger.json", "--out-dir", "reports"],
    );
    let comparison = read(dir, "reports/comparison.md");
    assert!(comparison.contains("| stub-echo | stub | none | bench 10 | 100.00% |"));
    assert!(dir.join("reports/comparison.csv").exists());
    assert!(dir.join("reports/small_model_progression.csv").exists());
    assert!(dir.join("reports/large_model_comparison.csv").exists());
    assert!(dir.join("reports/error_breakdown.csv").exists());
    assert!(read(dir, "reports/small_model_progression.csv").contains("stub-echo,stub,100.00"));

    // Re-rendering is byte-identical.
    let first = read(dir, "reports/comparison.csv");
    run_ok(
        dir,
        &["report", "--ledger", "ledger.json", "--out-dir", "reports"],
    );
    assert_eq!(first, read(dir, "reports/comparison.csv"));
}

#[test]
fn unknown_flag_is_a_usage_error_with_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let output = nl2sql(tmp.path(), &["score", "--no-such-flag"]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn missing_input_is_a_single_line_error_with_exit_1() {
    let tmp = tempfile::tempdir().unwrap();
    let output = nl2sql(
        tmp.path(),
        &["score", "--in", "absent.json", "--out", "scored.jsonl"],
    );
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert_eq!(stderr.lines().count(), 1, "stderr: {stderr}");
    assert!(stderr.starts_with("error: "));
}

#[test]
fn insufficient_bucket_fails_loudly() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    build_corpus_root(dir);
    run_ok(
        dir,
        &["score", "--in", "examples.json", "--out", "scored.jsonl"],
    );
    // 40 hard examples requested, only 8 exist.
    let output = nl2sql(
        dir,
        &[
            "curate",
            "--in",
            "scored.jsonl",
            "--out",
            "x.jsonl",
            "--total",
            "100",
            "--hard",
            "0.4",
            "--medium",
            "0.5",
            "--easy",
            "0.1",
            "--seed",
            "1",
        ],
    );
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(
        stderr.contains("bucket Medium has 10 examples available, 50 required"),
        "stderr: {stderr}"
    );
}

#[test]
fn config_file_fills_in_missing_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    build_corpus_root(dir);
    std::fs::write(
        dir.join("score.json"),
        serde_json::json!({"in": "examples.json", "out": "from_config.jsonl"}).to_string(),
    )
    .unwrap();
    run_ok(dir, &["score", "--config", "score.json"]);
    assert_eq!(line_count(dir, "from_config.jsonl"), 30);

    // Command-line flags win over config values.
    run_ok(
        dir,
        &["score", "--config", "score.json", "--out", "cli_wins.jsonl"],
    );
    assert!(dir.join("cli_wins.jsonl").exists());
}

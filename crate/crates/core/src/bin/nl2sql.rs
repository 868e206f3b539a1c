//! Command-line entry point tying the pipeline together:
//! score -> curate / split / benchmark -> describe -> build-cot /
//! validate-cot -> infer -> evaluate -> report.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use nl2sql_core::complexity::{score_corpus, ThresholdsConfig, WeightsConfig};
use nl2sql_core::corpus::{
    db_file_path, describe_schema, load_examples, load_schemas, DbSchema, DescribeOptions,
    NlSqlExample, SchemaDescription,
};
use nl2sql_core::cot::{
    assemble_cot_record, export_records, import_records, split_teacher_output, validate_cot_record,
};
use nl2sql_core::curator::{
    build_benchmark, read_dataset, read_dataset_records, split_train_val, stratified_curate,
    write_dataset, CuratedDataset, DatasetRecord, DistributionSpec,
};
use nl2sql_core::evaluator::{
    database_digests, evaluate, CompareSettings, DuplicatePolicy, EvalSettings, RowOrderPolicy,
};
use nl2sql_core::gateway::{
    read_predictions, run_batch, EndpointConfig, PredictionKey, PromptMode, PromptOptions,
};
use nl2sql_core::report::{
    load_ledger, load_runs, render_accuracy_series, render_comparison, render_error_breakdown,
    render_evaluation_summary, TableFormat,
};
use nl2sql_core::util::{sha256_file, write_jsonl, write_text};

#[derive(Parser)]
#[command(
    name = "nl2sql",
    version,
    about = "Curate and evaluate NL2SQL datasets: complexity scoring, stratified sampling, schema descriptions, chain-of-thought records, batch inference, execution accuracy"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score a corpus and print its difficulty distribution
    Score(ScoreArgs),
    /// Draw a stratified dataset with exact per-bucket counts
    Curate(CurateArgs),
    /// Split a curated dataset into train and validation parts
    Split(SplitArgs),
    /// Build a benchmark disjoint from a training set
    Benchmark(BenchmarkArgs),
    /// Render schema descriptions
    Describe(DescribeArgs),
    /// Assemble chain-of-thought training records from teacher outputs
    BuildCot(BuildCotArgs),
    /// Validate chain-of-thought records structurally and by execution
    ValidateCot(ValidateCotArgs),
    /// Run batch inference against a chat-completion endpoint
    Infer(InferArgs),
    /// Evaluate predictions by execution accuracy
    Evaluate(EvaluateArgs),
    /// Render run comparisons and figure series from a ledger
    Report(ReportArgs),
}

#[derive(Args)]
struct ConfigFlag {
    /// Optional JSON config file; keys are long flag names, values fill in
    /// flags not given on the command line
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct WeightFlags {
    /// Points per join connector
    #[arg(long, default_value_t = 1.0)]
    w_join: f64,
    /// Points when GROUP BY is present on a select node
    #[arg(long, default_value_t = 1.0)]
    w_group_by: f64,
    /// Points when ORDER BY is present on a select node
    #[arg(long, default_value_t = 1.0)]
    w_order_by: f64,
    /// Points when HAVING is present on a select node
    #[arg(long, default_value_t = 1.0)]
    w_having: f64,
    /// Points per nested select, on top of its recursive score
    #[arg(long, default_value_t = 1.0)]
    w_nesting: f64,
    /// Highest score still bucketed Easy
    #[arg(long, default_value_t = 1.0)]
    easy_max: f64,
    /// Highest score still bucketed Medium
    #[arg(long, default_value_t = 3.0)]
    medium_max: f64,
}

impl WeightFlags {
    fn weights(&self) -> WeightsConfig {
        WeightsConfig {
            w_join: self.w_join,
            w_group_by: self.w_group_by,
            w_order_by: self.w_order_by,
            w_having: self.w_having,
            w_nesting: self.w_nesting,
        }
    }

    fn thresholds(&self) -> ThresholdsConfig {
        ThresholdsConfig {
            easy_max: self.easy_max,
            medium_max: self.medium_max,
        }
    }
}

#[derive(Args)]
struct ScoreArgs {
    /// Examples file (JSON array with question / query / db_id)
    #[arg(long = "in")]
    input: PathBuf,
    /// Scored dataset output (line-delimited JSON)
    #[arg(long)]
    out: PathBuf,
    /// Where to write skipped (unparseable) entries; defaults to
    /// <out>.skipped.jsonl
    #[arg(long)]
    skipped_out: Option<PathBuf>,
    /// Also write the distribution table to this file
    #[arg(long)]
    summary_out: Option<PathBuf>,
    #[command(flatten)]
    weights: WeightFlags,
    #[command(flatten)]
    config: ConfigFlag,
}

#[derive(Args)]
struct CurateArgs {
    /// Scored dataset to draw from
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Dataset size
    #[arg(long)]
    total: usize,
    /// Fraction of Hard examples
    #[arg(long)]
    hard: f64,
    /// Fraction of Medium examples
    #[arg(long)]
    medium: f64,
    /// Fraction of Easy examples
    #[arg(long)]
    easy: f64,
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    config: ConfigFlag,
}

#[derive(Args)]
struct SplitArgs {
    /// Curated dataset to split
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    train_out: PathBuf,
    #[arg(long)]
    val_out: PathBuf,
    #[arg(long)]
    train_count: usize,
    #[arg(long)]
    val_count: usize,
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    config: ConfigFlag,
}

#[derive(Args)]
struct BenchmarkArgs {
    /// Scored pool to draw from
    #[arg(long = "in")]
    input: PathBuf,
    /// Dataset whose items must not appear in the benchmark
    #[arg(long)]
    exclude: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    total: usize,
    #[arg(long)]
    hard: f64,
    #[arg(long)]
    medium: f64,
    #[arg(long)]
    easy: f64,
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    config: ConfigFlag,
}

#[derive(Args)]
struct DescribeArgs {
    /// Tables catalog (JSON array)
    #[arg(long)]
    tables: PathBuf,
    /// Describe just this database; with it --out is a file, without it
    /// --out is a directory receiving one <db_id>.txt per database
    #[arg(long)]
    db_id: Option<String>,
    /// Corpus root holding database/<db_id>/<db_id>.sqlite files
    #[arg(long)]
    db_root: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = false)]
    include_samples: bool,
    #[arg(long, default_value_t = 3)]
    sample_count: usize,
    #[command(flatten)]
    config: ConfigFlag,
}

#[derive(Args)]
struct BuildCotArgs {
    /// Dataset the teacher ran on
    #[arg(long)]
    dataset: PathBuf,
    /// Teacher predictions (from `infer --mode cot`)
    #[arg(long)]
    predictions: PathBuf,
    #[arg(long)]
    tables: PathBuf,
    #[arg(long)]
    db_root: Option<PathBuf>,
    /// Records output (line-delimited messages envelopes); item keys go to
    /// <out>.keys.jsonl, skipped items to <out>.skipped.jsonl
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = false)]
    include_samples: bool,
    #[arg(long, default_value_t = 3)]
    sample_count: usize,
    #[command(flatten)]
    config: ConfigFlag,
}

#[derive(Args)]
struct ValidateCotArgs {
    /// Records file to validate
    #[arg(long)]
    records: PathBuf,
    /// Keys sidecar pairing each record with its dataset item; defaults to
    /// <records>.keys.jsonl, falling back to positional pairing
    #[arg(long)]
    keys: Option<PathBuf>,
    /// Dataset holding the gold queries
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    db_root: PathBuf,
    /// Per-record validation results (line-delimited JSON)
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 30.0)]
    timeout: f64,
    #[command(flatten)]
    config: ConfigFlag,
}

#[derive(Args)]
struct InferArgs {
    /// Dataset to run inference on
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    tables: PathBuf,
    #[arg(long)]
    db_root: Option<PathBuf>,
    /// Endpoint base URL; /chat/completions is appended
    #[arg(long)]
    endpoint: String,
    #[arg(long)]
    model: String,
    /// Prediction file output
    #[arg(long)]
    out: PathBuf,
    /// Environment variable holding the bearer token
    #[arg(long)]
    token_env: Option<String>,
    #[arg(long, default_value_t = 4)]
    concurrency: usize,
    #[arg(long, default_value_t = 60.0)]
    timeout: f64,
    #[arg(long, default_value_t = 3)]
    retries: u32,
    #[arg(long, default_value_t = 0.5)]
    backoff_base: f64,
    #[arg(long, default_value_t = 2.0)]
    backoff_multiplier: f64,
    #[arg(long, default_value_t = 0.0)]
    temperature: f64,
    /// Prompt mode: direct or cot
    #[arg(long, default_value = "direct")]
    mode: PromptMode,
    #[arg(long, default_value_t = false)]
    self_correction: bool,
    #[arg(long, default_value_t = false)]
    include_samples: bool,
    #[arg(long, default_value_t = 3)]
    sample_count: usize,
    #[command(flatten)]
    config: ConfigFlag,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    predictions: PathBuf,
    /// Benchmark dataset the predictions answer
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    db_root: PathBuf,
    /// Evaluation report output (JSON)
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 30.0)]
    timeout: f64,
    #[arg(long, default_value_t = 1e-6)]
    float_rel_tol: f64,
    #[arg(long, default_value_t = 1e-9)]
    float_abs_tol: f64,
    /// Row order: from-gold, ordered, or unordered
    #[arg(long, default_value = "from-gold")]
    row_order: String,
    /// Duplicate rows: multiset or set
    #[arg(long, default_value = "multiset")]
    duplicates: String,
    #[arg(long, default_value_t = false)]
    match_column_names: bool,
    #[command(flatten)]
    config: ConfigFlag,
}

#[derive(Args)]
struct ReportArgs {
    /// Run ledger (JSON)
    #[arg(long)]
    ledger: PathBuf,
    /// Directory receiving comparison tables and figure series
    #[arg(long)]
    out_dir: PathBuf,
    /// markdown, csv, or both
    #[arg(long, default_value = "both")]
    format: String,
    #[command(flatten)]
    config: ConfigFlag,
}

fn main() {
    let args = match inject_config_defaults(std::env::args_os().collect()) {
        Ok(args) => args,
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(1);
        }
    };
    let cli = Cli::parse_from(args);
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

/// When `--config file.json` is present, fill in any flag the command line
/// does not already carry. Keys are long flag names; `true` adds a bare
/// flag, `false` and `null` add nothing.
fn inject_config_defaults(mut args: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(pos) = args.iter().position(|a| a == "--config") else {
        return Ok(args);
    };
    let path = args
        .get(pos + 1)
        .cloned()
        .ok_or_else(|| anyhow!("--config requires a file path"))?;
    let text = std::fs::read_to_string(&path)
        .with_context(|| format!("reading config file {}", PathBuf::from(&path).display()))?;
    let values: serde_json::Map<String, serde_json::Value> = serde_json::from_str(&text)
        .with_context(|| {
            format!(
                "config file {} is not a JSON object",
                PathBuf::from(&path).display()
            )
        })?;

    for (key, value) in values {
        let flag = format!("--{key}");
        if args.iter().any(|a| *a == std::ffi::OsStr::new(&flag)) {
            continue;
        }
        match value {
            serde_json::Value::Bool(true) => args.push(flag.into()),
            serde_json::Value::Bool(false) | serde_json::Value::Null => {}
            serde_json::Value::String(s) => {
                args.push(flag.into());
                args.push(s.into());
            }
            other => {
                args.push(flag.into());
                args.push(other.to_string().into());
            }
        }
    }
    Ok(args)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Score(args) => cmd_score(args),
        Command::Curate(args) => cmd_curate(args),
        Command::Split(args) => cmd_split(args),
        Command::Benchmark(args) => cmd_benchmark(args),
        Command::Describe(args) => cmd_describe(args),
        Command::BuildCot(args) => cmd_build_cot(args),
        Command::ValidateCot(args) => cmd_validate_cot(args),
        Command::Infer(args) => cmd_infer(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Report(args) => cmd_report(args),
    }
}

fn cmd_score(args: ScoreArgs) -> Result<()> {
    let examples = load_examples(&args.input)
        .with_context(|| format!("loading examples from {}", args.input.display()))?;
    let weights = args.weights.weights();
    let thresholds = args.weights.thresholds();
    let scoring = score_corpus(&examples, &weights, &thresholds)?;

    let records: Vec<DatasetRecord> = scoring
        .scored
        .iter()
        .map(DatasetRecord::from_scored)
        .collect();
    write_jsonl(&args.out, &records)?;
    // Manifest sidecar so downstream curation inherits these configs.
    let dataset = CuratedDataset::from_scored_pool(
        scoring.scored.clone(),
        &weights,
        &thresholds,
        sha256_file(&args.input).ok(),
    );
    nl2sql_core::curator::write_manifest(&args.out, &dataset.manifest)?;

    let skipped_out = args
        .skipped_out
        .unwrap_or_else(|| sibling(&args.out, ".skipped.jsonl"));
    write_jsonl(&skipped_out, &scoring.skipped)?;

    let table = scoring.summary.render_table();
    print!("{table}");
    println!(
        "scored: {}  skipped: {}",
        scoring.scored.len(),
        scoring.skipped.len()
    );
    if let Some(summary_out) = args.summary_out {
        write_text(&summary_out, &table)?;
    }
    Ok(())
}

fn spec_from(total: usize, hard: f64, medium: f64, easy: f64) -> DistributionSpec {
    DistributionSpec {
        hard,
        medium,
        easy,
        total,
    }
}

fn cmd_curate(args: CurateArgs) -> Result<()> {
    let pool = read_dataset(&args.input)
        .with_context(|| format!("loading scored pool from {}", args.input.display()))?;
    let spec = spec_from(args.total, args.hard, args.medium, args.easy);
    let digest = sha256_file(&args.input).ok();
    let dataset = stratified_curate(
        &pool.items,
        &spec,
        &pool.manifest.weights,
        &pool.manifest.thresholds,
        args.seed,
        digest,
    )?;
    write_dataset(&args.out, &dataset)?;
    print_counts("curated", &dataset);
    Ok(())
}

fn cmd_split(args: SplitArgs) -> Result<()> {
    let dataset = read_dataset(&args.input)
        .with_context(|| format!("loading dataset from {}", args.input.display()))?;
    let (train, val) = split_train_val(&dataset, args.train_count, args.val_count, args.seed)?;
    write_dataset(&args.train_out, &train)?;
    write_dataset(&args.val_out, &val)?;
    print_counts("train", &train);
    print_counts("val", &val);
    Ok(())
}

fn cmd_benchmark(args: BenchmarkArgs) -> Result<()> {
    let pool = read_dataset(&args.input)
        .with_context(|| format!("loading scored pool from {}", args.input.display()))?;
    let exclude = match &args.exclude {
        Some(path) => {
            read_dataset(path)
                .with_context(|| format!("loading exclusion set from {}", path.display()))?
                .items
        }
        None => Vec::new(),
    };
    let spec = spec_from(args.total, args.hard, args.medium, args.easy);
    let digest = sha256_file(&args.input).ok();
    let benchmark = build_benchmark(
        &pool.items,
        &spec,
        &exclude,
        &pool.manifest.weights,
        &pool.manifest.thresholds,
        args.seed,
        digest,
    )?;
    write_dataset(&args.out, &benchmark)?;
    print_counts("benchmark", &benchmark);
    Ok(())
}

fn print_counts(label: &str, dataset: &CuratedDataset) {
    let counts = &dataset.manifest.bucket_counts;
    let mut parts: Vec<String> = Vec::new();
    for (bucket, count) in counts {
        parts.push(format!("{bucket}={count}"));
    }
    println!(
        "{label}: {} items ({})",
        dataset.items.len(),
        parts.join(", ")
    );
}

/// Build one schema description, using the database file when available.
fn build_description(
    schema: &DbSchema,
    db_root: Option<&Path>,
    include_samples: bool,
    sample_count: usize,
) -> Result<SchemaDescription> {
    let db_file = db_root
        .map(|root| db_file_path(root, &schema.db_id))
        .filter(|p| p.exists());
    if include_samples && db_file.is_none() {
        bail!(
            "--include-samples needs the database file for \"{}\" (pass --db-root)",
            schema.db_id
        );
    }
    let options = DescribeOptions {
        include_samples,
        sample_count,
    };
    Ok(describe_schema(schema, &options, db_file.as_deref())?)
}

fn descriptions_for(
    dataset: &[DatasetRecord],
    tables: &Path,
    db_root: Option<&Path>,
    include_samples: bool,
    sample_count: usize,
) -> Result<BTreeMap<String, SchemaDescription>> {
    let schemas = load_schemas(tables)
        .with_context(|| format!("loading tables catalog from {}", tables.display()))?;
    let mut out = BTreeMap::new();
    for record in dataset {
        if out.contains_key(&record.db_id) {
            continue;
        }
        let schema = schemas
            .get(&record.db_id)
            .ok_or_else(|| anyhow!("db_id \"{}\" not found in tables catalog", record.db_id))?;
        let description = build_description(schema, db_root, include_samples, sample_count)?;
        out.insert(record.db_id.clone(), description);
    }
    Ok(out)
}

fn cmd_describe(args: DescribeArgs) -> Result<()> {
    let schemas = load_schemas(&args.tables)
        .with_context(|| format!("loading tables catalog from {}", args.tables.display()))?;
    match &args.db_id {
        Some(db_id) => {
            let schema = schemas
                .get(db_id)
                .ok_or_else(|| anyhow!("db_id \"{db_id}\" not found in tables catalog"))?;
            let description = build_description(
                schema,
                args.db_root.as_deref(),
                args.include_samples,
                args.sample_count,
            )?;
            for warning in &description.warnings {
                eprintln!("warning: {warning}");
            }
            write_text(&args.out, &description.text)?;
            println!("wrote {}", args.out.display());
        }
        None => {
            std::fs::create_dir_all(&args.out)
                .with_context(|| format!("creating {}", args.out.display()))?;
            for (db_id, schema) in &schemas {
                let description = build_description(
                    schema,
                    args.db_root.as_deref(),
                    args.include_samples,
                    args.sample_count,
                )?;
                write_text(&args.out.join(format!("{db_id}.txt")), &description.text)?;
            }
            println!(
                "wrote {} descriptions to {}",
                schemas.len(),
                args.out.display()
            );
        }
    }
    Ok(())
}

#[derive(serde::Serialize)]
struct SkippedCot {
    source_index: u64,
    db_id: String,
    reason: String,
}

fn cmd_build_cot(args: BuildCotArgs) -> Result<()> {
    let dataset = read_dataset_records(&args.dataset)
        .with_context(|| format!("loading dataset from {}", args.dataset.display()))?;
    let predictions = read_predictions(&args.predictions)
        .with_context(|| format!("loading predictions from {}", args.predictions.display()))?;
    let descriptions = descriptions_for(
        &dataset,
        &args.tables,
        args.db_root.as_deref(),
        args.include_samples,
        args.sample_count,
    )?;

    let by_key: BTreeMap<(u64, &str), &str> = predictions
        .iter()
        .map(|p| {
            (
                (p.key.source_index, p.key.db_id.as_str()),
                p.raw_output.as_str(),
            )
        })
        .collect();

    let mut records = Vec::new();
    let mut keys = Vec::new();
    let mut skipped = Vec::new();
    for item in &dataset {
        let example = NlSqlExample {
            question: item.question.clone(),
            gold_sql: item.gold_sql.clone(),
            db_id: item.db_id.clone(),
            source_index: item.source_index,
        };
        let skip = |reason: String| SkippedCot {
            source_index: item.source_index,
            db_id: item.db_id.clone(),
            reason,
        };
        let Some(raw) = by_key.get(&(item.source_index, item.db_id.as_str())) else {
            skipped.push(skip("no teacher output for this item".to_string()));
            continue;
        };
        let Some((reasoning, final_sql)) = split_teacher_output(raw) else {
            skipped.push(skip(
                "teacher output has no reasoning + sql fence".to_string(),
            ));
            continue;
        };
        match assemble_cot_record(&example, &descriptions[&item.db_id], &reasoning, &final_sql) {
            Ok(record) => {
                records.push(record);
                keys.push(PredictionKey {
                    source_index: item.source_index,
                    db_id: item.db_id.clone(),
                });
            }
            Err(e) => skipped.push(skip(e.to_string())),
        }
    }

    export_records(&records, &args.out)?;
    write_jsonl(&sibling(&args.out, ".keys.jsonl"), &keys)?;
    write_jsonl(&sibling(&args.out, ".skipped.jsonl"), &skipped)?;
    println!("records: {}  skipped: {}", records.len(), skipped.len());
    Ok(())
}

#[derive(serde::Serialize)]
struct ValidationRow {
    source_index: u64,
    db_id: String,
    structural_ok: bool,
    execution_match: Option<bool>,
    step_coverage: Vec<nl2sql_core::cot::StepLabel>,
    failure_reason: Option<nl2sql_core::cot::CotFailure>,
    empty_result_match: bool,
    unjudgeable: Option<String>,
}

fn cmd_validate_cot(args: ValidateCotArgs) -> Result<()> {
    let records = import_records(&args.records)
        .with_context(|| format!("loading records from {}", args.records.display()))?;
    let dataset = read_dataset_records(&args.dataset)
        .with_context(|| format!("loading dataset from {}", args.dataset.display()))?;

    let keys_path = args
        .keys
        .clone()
        .unwrap_or_else(|| sibling(&args.records, ".keys.jsonl"));
    let keys: Vec<PredictionKey> = if keys_path.exists() {
        nl2sql_core::util::read_jsonl(&keys_path)?
    } else {
        if records.len() > dataset.len() {
            bail!(
                "{} records but only {} dataset items and no keys sidecar at {}",
                records.len(),
                dataset.len(),
                keys_path.display()
            );
        }
        dataset
            .iter()
            .take(records.len())
            .map(|r| PredictionKey {
                source_index: r.source_index,
                db_id: r.db_id.clone(),
            })
            .collect()
    };
    if keys.len() != records.len() {
        bail!(
            "keys sidecar has {} entries for {} records",
            keys.len(),
            records.len()
        );
    }

    let by_key: BTreeMap<(u64, &str), &DatasetRecord> = dataset
        .iter()
        .map(|r| ((r.source_index, r.db_id.as_str()), r))
        .collect();

    let settings = EvalSettings {
        timeout_secs: args.timeout,
        ..EvalSettings::default()
    };

    let mut rows = Vec::with_capacity(records.len());
    let (mut ok_count, mut match_count, mut unjudgeable_count) = (0usize, 0usize, 0usize);
    for (record, key) in records.iter().zip(&keys) {
        let item = by_key
            .get(&(key.source_index, key.db_id.as_str()))
            .ok_or_else(|| {
                anyhow!(
                    "record key {}/{} not present in dataset",
                    key.db_id,
                    key.source_index
                )
            })?;
        let gold = NlSqlExample {
            question: item.question.clone(),
            gold_sql: item.gold_sql.clone(),
            db_id: item.db_id.clone(),
            source_index: item.source_index,
        };
        let db_file = db_file_path(&args.db_root, &item.db_id);
        match validate_cot_record(record, &gold, &db_file, &settings) {
            Ok(result) => {
                ok_count += usize::from(result.structural_ok);
                match_count += usize::from(result.execution_match == Some(true));
                rows.push(ValidationRow {
                    source_index: key.source_index,
                    db_id: key.db_id.clone(),
                    structural_ok: result.structural_ok,
                    execution_match: result.execution_match,
                    step_coverage: result.step_coverage,
                    failure_reason: result.failure_reason,
                    empty_result_match: result.empty_result_match,
                    unjudgeable: None,
                });
            }
            Err(e) => {
                unjudgeable_count += 1;
                rows.push(ValidationRow {
                    source_index: key.source_index,
                    db_id: key.db_id.clone(),
                    structural_ok: false,
                    execution_match: None,
                    step_coverage: Vec::new(),
                    failure_reason: None,
                    empty_result_match: false,
                    unjudgeable: Some(e.to_string()),
                });
            }
        }
    }

    write_jsonl(&args.out, &rows)?;
    println!(
        "records: {}  structural_ok: {}  execution_match: {}  unjudgeable: {}",
        records.len(),
        ok_count,
        match_count,
        unjudgeable_count
    );
    Ok(())
}

fn cmd_infer(args: InferArgs) -> Result<()> {
    let dataset = read_dataset_records(&args.dataset)
        .with_context(|| format!("loading dataset from {}", args.dataset.display()))?;
    let descriptions = descriptions_for(
        &dataset,
        &args.tables,
        args.db_root.as_deref(),
        args.include_samples,
        args.sample_count,
    )?;

    let config = EndpointConfig {
        base_url: args.endpoint,
        model: args.model,
        token_env: args.token_env,
        timeout_secs: args.timeout,
        max_retries: args.retries,
        backoff_base_secs: args.backoff_base,
        backoff_multiplier: args.backoff_multiplier,
        max_concurrent: args.concurrency,
        temperature: args.temperature,
    };
    let options = PromptOptions {
        mode: args.mode,
        self_correction: args.self_correction,
        descriptions,
    };
    let predictions = run_batch(&dataset, &config, &options, &args.out)?;
    let failures = predictions.iter().filter(|p| p.error.is_some()).count();
    println!(
        "predictions: {}  transport failures: {}",
        predictions.len(),
        failures
    );
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<()> {
    let predictions = read_predictions(&args.predictions)
        .with_context(|| format!("loading predictions from {}", args.predictions.display()))?;
    let dataset = read_dataset_records(&args.dataset)
        .with_context(|| format!("loading dataset from {}", args.dataset.display()))?;

    let row_order = match args.row_order.as_str() {
        "from-gold" => RowOrderPolicy::FromGold,
        "ordered" => RowOrderPolicy::AlwaysOrdered,
        "unordered" => RowOrderPolicy::NeverOrdered,
        other => bail!("unknown --row-order {other} (expected from-gold, ordered or unordered)"),
    };
    let duplicates = match args.duplicates.as_str() {
        "multiset" => DuplicatePolicy::Multiset,
        "set" => DuplicatePolicy::Set,
        other => bail!("unknown --duplicates {other} (expected multiset or set)"),
    };
    let settings = EvalSettings {
        compare: CompareSettings {
            float_rel_tol: args.float_rel_tol,
            float_abs_tol: args.float_abs_tol,
            row_order,
            duplicates,
            match_column_names: args.match_column_names,
        },
        timeout_secs: args.timeout,
    };

    let digest = sha256_file(&args.dataset).ok();
    let digests_before = database_digests(&dataset, &args.db_root)?;
    let report = evaluate(&predictions, &dataset, &args.db_root, &settings, digest)?;
    let digests_after = database_digests(&dataset, &args.db_root)?;
    if digests_before != digests_after {
        bail!("database files changed during evaluation; shadow databases must stay read-only");
    }

    write_text(
        &args.out,
        &serde_json::to_string_pretty(&report).context("serializing report")?,
    )?;
    print!("{}", render_evaluation_summary(&report));
    Ok(())
}

fn cmd_report(args: ReportArgs) -> Result<()> {
    let ledger = load_ledger(&args.ledger)?;
    let base_dir = args
        .ledger
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    let runs = load_runs(&ledger, &base_dir)?;

    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;

    let (markdown, csv) = match args.format.as_str() {
        "markdown" => (true, false),
        "csv" => (false, true),
        "both" => (true, true),
        other => bail!("unknown --format {other} (expected markdown, csv or both)"),
    };
    if markdown {
        write_text(
            &args.out_dir.join("comparison.md"),
            &render_comparison(&runs, TableFormat::Markdown),
        )?;
    }
    if csv {
        write_text(
            &args.out_dir.join("comparison.csv"),
            &render_comparison(&runs, TableFormat::Csv),
        )?;
    }
    write_text(
        &args.out_dir.join("large_model_comparison.csv"),
        &render_accuracy_series(&runs, "large"),
    )?;
    write_text(
        &args.out_dir.join("small_model_progression.csv"),
        &render_accuracy_series(&runs, "small"),
    )?;
    write_text(
        &args.out_dir.join("error_breakdown.csv"),
        &render_error_breakdown(&runs),
    )?;
    println!("wrote reports to {}", args.out_dir.display());
    Ok(())
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(suffix);
    path.with_file_name(name)
}

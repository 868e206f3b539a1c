//! Execution-accuracy evaluation: extract SQL from model output, run gold
//! and predicted queries against a read-only copy of the database, compare
//! result sets, and classify each item.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use rusqlite::types::ValueRef;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complexity::DifficultyBucket;
use crate::corpus::{db_file_path, open_read_only};
use crate::curator::DatasetRecord;
use crate::gateway::{Prediction, PredictionKey};
use crate::sql::{parse_sql, ParseOptions};
use crate::util::sha256_file;

/// One cell of a materialized result set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SqlValue {
    Null,
    Integer(i64),
    Real(f64),
    Text(String),
    Blob(Vec<u8>),
}

impl SqlValue {
    fn from_ref(value: ValueRef<'_>) -> SqlValue {
        match value {
            ValueRef::Null => SqlValue::Null,
            ValueRef::Integer(i) => SqlValue::Integer(i),
            ValueRef::Real(f) => SqlValue::Real(f),
            ValueRef::Text(t) => SqlValue::Text(String::from_utf8_lossy(t).into_owned()),
            ValueRef::Blob(b) => SqlValue::Blob(b.to_vec()),
        }
    }

    fn as_f64(&self) -> Option<f64> {
        match self {
            SqlValue::Integer(i) => Some(*i as f64),
            SqlValue::Real(f) => Some(*f),
            _ => None,
        }
    }
}

/// A fully materialized query result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<SqlValue>>,
}

/// Why a query execution did not produce a result table.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum ExecFailure {
    #[error("execution error: {0}")]
    Error(String),
    #[error("query timed out")]
    Timeout,
    #[error("write attempt rejected: {0}")]
    WriteAttempt(String),
    #[error("database unreadable: {0}")]
    DatabaseUnreadable(String),
}

/// Pull the final SQL out of raw model output.
///
/// The last ```sql fence wins; with no sql-tagged fence, the last fence of
/// any kind; with no fence at all, the trimmed raw text. May return an empty
/// string (classified upstream as extraction failure).
pub fn extract_sql(raw_output: &str) -> String {
    let (last_sql, last_any) = scan_fences(raw_output);
    last_sql
        .or(last_any)
        .unwrap_or_else(|| raw_output.trim().to_string())
}

/// The last ```sql-tagged fence, if any. Used where a fence is structurally
/// required rather than merely preferred.
pub fn last_sql_fence(raw_output: &str) -> Option<String> {
    scan_fences(raw_output).0
}

fn scan_fences(raw_output: &str) -> (Option<String>, Option<String>) {
    let mut last_sql: Option<String> = None;
    let mut last_any: Option<String> = None;

    let segments: Vec<&str> = raw_output.split("```").collect();
    for (i, segment) in segments.iter().enumerate() {
        if i % 2 == 0 {
            continue; // outside a fence
        }
        let (is_sql, content) = split_fence_tag(segment);
        let content = content.trim().to_string();
        if is_sql {
            last_sql = Some(content);
        } else {
            last_any = Some(content);
        }
    }
    (last_sql, last_any)
}

/// Separate a fence's language tag from its body. Recognizes `sql` and
/// `sqlite` tags (any case); anything else counts as an untagged fence.
fn split_fence_tag(segment: &str) -> (bool, &str) {
    let rest = segment
        .strip_prefix("sql")
        .or_else(|| segment.strip_prefix("SQL"));
    if let Some(rest) = rest {
        if rest.is_empty() || rest.starts_with([' ', '\n', '\r', '\t']) {
            return (true, rest);
        }
    }
    if let Some(rest) = segment.strip_prefix("sqlite") {
        if rest.is_empty() || rest.starts_with([' ', '\n', '\r', '\t']) {
            return (true, rest);
        }
    }
    match segment.find('\n') {
        Some(nl) => {
            let first_line = segment[..nl].trim();
            // A single-word first line is a language tag; anything longer is
            // fence content that happens to start on the opening line.
            if !first_line.is_empty()
                && first_line
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
                && first_line.len() <= 16
            {
                (false, &segment[nl + 1..])
            } else {
                (false, segment)
            }
        }
        None => (false, segment),
    }
}

/// Statement classification used before execution. Only a single SELECT
/// (or WITH ... SELECT) statement is allowed through.
fn classify_statement(sql: &str) -> Result<(), ExecFailure> {
    let stripped = strip_leading_trivia(sql);
    let head: String = stripped
        .chars()
        .take_while(|c| c.is_ascii_alphanumeric() || *c == '_')
        .collect();
    let head_upper = head.to_ascii_uppercase();
    if head_upper != "SELECT" && head_upper != "WITH" && head_upper != "VALUES" {
        return Err(ExecFailure::WriteAttempt(format!(
            "only SELECT statements are executed, found \"{}\"",
            if head.is_empty() { "<empty>" } else { &head }
        )));
    }
    if has_second_statement(sql) {
        return Err(ExecFailure::WriteAttempt(
            "multiple statements are not allowed".to_string(),
        ));
    }
    Ok(())
}

fn strip_leading_trivia(sql: &str) -> &str {
    let mut rest = sql;
    loop {
        rest = rest.trim_start();
        if let Some(r) = rest.strip_prefix("--") {
            rest = r.split_once('\n').map_or("", |(_, tail)| tail);
        } else if let Some(r) = rest.strip_prefix("/*") {
            rest = r.split_once("*/").map_or("", |(_, tail)| tail);
        } else {
            return rest;
        }
    }
}

/// Detect a top-level `;` followed by more content.
fn has_second_statement(sql: &str) -> bool {
    let bytes = sql.as_bytes();
    let mut i = 0;
    let mut quote: Option<u8> = None;
    while i < bytes.len() {
        let b = bytes[i];
        match quote {
            Some(q) => {
                if b == q {
                    // Doubled quote characters escape themselves.
                    if bytes.get(i + 1) == Some(&q) {
                        i += 1;
                    } else {
                        quote = None;
                    }
                }
            }
            None => match b {
                b'\'' | b'"' | b'`' => quote = Some(b),
                b'-' if bytes.get(i + 1) == Some(&b'-') => {
                    while i < bytes.len() && bytes[i] != b'\n' {
                        i += 1;
                    }
                }
                b'/' if bytes.get(i + 1) == Some(&b'*') => {
                    i += 2;
                    while i + 1 < bytes.len() && !(bytes[i] == b'*' && bytes[i + 1] == b'/') {
                        i += 1;
                    }
                    i += 1;
                }
                b';' => {
                    let tail = strip_leading_trivia(&sql[i + 1..]);
                    return !tail.is_empty();
                }
                _ => {}
            },
        }
        i += 1;
    }
    false
}

/// Execute a single SELECT read-only and materialize the full result.
pub fn execute_query(
    db_file: &Path,
    sql: &str,
    timeout: Duration,
) -> Result<ResultTable, ExecFailure> {
    classify_statement(sql)?;

    let conn =
        open_read_only(db_file).map_err(|e| ExecFailure::DatabaseUnreadable(e.to_string()))?;

    let deadline = Instant::now() + timeout;
    conn.progress_handler(100, Some(move || Instant::now() > deadline));

    let result = (|| {
        let mut stmt = conn
            .prepare(sql)
            .map_err(|e| ExecFailure::Error(e.to_string()))?;
        if !stmt.readonly() {
            return Err(ExecFailure::WriteAttempt(
                "statement is not read-only".to_string(),
            ));
        }
        let columns: Vec<String> = stmt.column_names().iter().map(|s| s.to_string()).collect();
        let arity = columns.len();
        let mut rows_out = Vec::new();
        let mut rows = stmt.query([]).map_err(map_exec_err)?;
        loop {
            match rows.next() {
                Ok(Some(row)) => {
                    let mut cells = Vec::with_capacity(arity);
                    for i in 0..arity {
                        let cell = row.get_ref(i).map_err(map_exec_err)?;
                        cells.push(SqlValue::from_ref(cell));
                    }
                    rows_out.push(cells);
                }
                Ok(None) => break,
                Err(e) => return Err(map_exec_err(e)),
            }
        }
        Ok(ResultTable {
            columns,
            rows: rows_out,
        })
    })();

    conn.progress_handler(100, None::<fn() -> bool>);
    result
}

fn map_exec_err(e: rusqlite::Error) -> ExecFailure {
    if let rusqlite::Error::SqliteFailure(err, _) = &e {
        if err.code == rusqlite::ErrorCode::OperationInterrupted {
            return ExecFailure::Timeout;
        }
    }
    ExecFailure::Error(e.to_string())
}

/// Row-order convention for result comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowOrderPolicy {
    /// Ordered when the gold query has ORDER BY, multiset otherwise.
    FromGold,
    AlwaysOrdered,
    NeverOrdered,
}

/// Whether duplicate rows are significant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DuplicatePolicy {
    Multiset,
    Set,
}

/// Comparison conventions, each toggleable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompareSettings {
    /// Relative tolerance for numeric cells.
    pub float_rel_tol: f64,
    /// Absolute tolerance near zero.
    pub float_abs_tol: f64,
    pub row_order: RowOrderPolicy,
    pub duplicates: DuplicatePolicy,
    /// When true, column names must match positionally (case-insensitive).
    /// Off by default: projections are compared by position only.
    pub match_column_names: bool,
}

impl Default for CompareSettings {
    fn default() -> Self {
        CompareSettings {
            float_rel_tol: 1e-6,
            float_abs_tol: 1e-9,
            row_order: RowOrderPolicy::FromGold,
            duplicates: DuplicatePolicy::Multiset,
            match_column_names: false,
        }
    }
}

/// Compare two materialized result sets.
///
/// Column names are ignored (unless toggled on), arity must match, numeric
/// cells compare within tolerance, text and blobs compare exactly, and NULL
/// equals NULL. Rows compare as an ordered sequence when the gold query
/// carries ORDER BY, as a multiset otherwise.
pub fn compare_results(
    gold: &ResultTable,
    pred: &ResultTable,
    gold_has_order_by: bool,
    settings: &CompareSettings,
) -> bool {
    if gold.columns.len() != pred.columns.len() {
        return false;
    }
    if settings.match_column_names {
        let names_match = gold
            .columns
            .iter()
            .zip(&pred.columns)
            .all(|(a, b)| a.eq_ignore_ascii_case(b));
        if !names_match {
            return false;
        }
    }

    let mut gold_rows: Vec<&Vec<SqlValue>> = gold.rows.iter().collect();
    let mut pred_rows: Vec<&Vec<SqlValue>> = pred.rows.iter().collect();
    if settings.duplicates == DuplicatePolicy::Set {
        dedup_rows(&mut gold_rows);
        dedup_rows(&mut pred_rows);
    }
    if gold_rows.len() != pred_rows.len() {
        return false;
    }

    let ordered = match settings.row_order {
        RowOrderPolicy::FromGold => gold_has_order_by,
        RowOrderPolicy::AlwaysOrdered => true,
        RowOrderPolicy::NeverOrdered => false,
    };

    if ordered {
        gold_rows
            .iter()
            .zip(&pred_rows)
            .all(|(g, p)| rows_equal(g, p, settings))
    } else {
        multiset_equal(&gold_rows, &pred_rows, settings)
    }
}

fn rows_equal(a: &[SqlValue], b: &[SqlValue], settings: &CompareSettings) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| cell_equal(x, y, settings))
}

fn cell_equal(a: &SqlValue, b: &SqlValue, settings: &CompareSettings) -> bool {
    match (a, b) {
        (SqlValue::Null, SqlValue::Null) => true,
        (SqlValue::Integer(x), SqlValue::Integer(y)) => x == y,
        (SqlValue::Text(x), SqlValue::Text(y)) => x == y,
        (SqlValue::Blob(x), SqlValue::Blob(y)) => x == y,
        _ => match (a.as_f64(), b.as_f64()) {
            (Some(x), Some(y)) => approx_equal(x, y, settings),
            _ => false,
        },
    }
}

fn approx_equal(x: f64, y: f64, settings: &CompareSettings) -> bool {
    if x == y {
        return true;
    }
    let scale = x.abs().max(y.abs());
    (x - y).abs() <= settings.float_abs_tol.max(settings.float_rel_tol * scale)
}

/// Total-order sort key for the exact fast path.
#[derive(PartialEq, Eq, PartialOrd, Ord)]
enum CellKey {
    Null,
    Int(i64),
    Real(u64),
    Text(String),
    Blob(Vec<u8>),
}

fn cell_key(v: &SqlValue) -> CellKey {
    match v {
        SqlValue::Null => CellKey::Null,
        SqlValue::Integer(i) => CellKey::Int(*i),
        SqlValue::Real(f) => {
            // total_cmp bit trick: flips negative floats so the bit pattern
            // orders like the values.
            let bits = f.to_bits();
            CellKey::Real(if bits >> 63 == 1 {
                !bits
            } else {
                bits ^ (1 << 63)
            })
        }
        SqlValue::Text(s) => CellKey::Text(s.clone()),
        SqlValue::Blob(b) => CellKey::Blob(b.clone()),
    }
}

fn row_key(row: &[SqlValue]) -> Vec<CellKey> {
    row.iter().map(cell_key).collect()
}

fn dedup_rows(rows: &mut Vec<&Vec<SqlValue>>) {
    let mut seen = std::collections::BTreeSet::new();
    rows.retain(|row| seen.insert(row_key(row)));
}

/// Multiset comparison: exact sorted equality first, falling back to
/// tolerance-aware maximum bipartite matching when float cells are present.
/// The fallback checks O(n^2) row pairs; result sets here are modest.
fn multiset_equal(
    gold: &[&Vec<SqlValue>],
    pred: &[&Vec<SqlValue>],
    settings: &CompareSettings,
) -> bool {
    let mut gold_keys: Vec<Vec<CellKey>> = gold.iter().map(|r| row_key(r)).collect();
    let mut pred_keys: Vec<Vec<CellKey>> = pred.iter().map(|r| row_key(r)).collect();
    gold_keys.sort();
    pred_keys.sort();
    if gold_keys == pred_keys {
        return true;
    }

    let has_real = gold
        .iter()
        .chain(pred.iter())
        .any(|row| row.iter().any(|c| matches!(c, SqlValue::Real(_))));
    if !has_real {
        return false;
    }

    // Kuhn's augmenting-path matching over the tolerance relation.
    let n = gold.len();
    let mut matched_to: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        let mut visited = vec![false; n];
        if !augment(i, gold, pred, settings, &mut visited, &mut matched_to) {
            return false;
        }
    }
    true
}

fn augment(
    i: usize,
    gold: &[&Vec<SqlValue>],
    pred: &[&Vec<SqlValue>],
    settings: &CompareSettings,
    visited: &mut [bool],
    matched_to: &mut [Option<usize>],
) -> bool {
    for j in 0..pred.len() {
        if visited[j] || !rows_equal(gold[i], pred[j], settings) {
            continue;
        }
        visited[j] = true;
        let free = match matched_to[j] {
            None => true,
            Some(prev) => augment(prev, gold, pred, settings, visited, matched_to),
        };
        if free {
            matched_to[j] = Some(i);
            return true;
        }
    }
    false
}

/// Per-item verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Correct,
    ResultMismatch,
    ExecutionFailed,
    GoldFailed,
    Timeout,
    ExtractionFailed,
}

impl Verdict {
    pub const ALL: [Verdict; 6] = [
        Verdict::Correct,
        Verdict::ResultMismatch,
        Verdict::ExecutionFailed,
        Verdict::GoldFailed,
        Verdict::Timeout,
        Verdict::ExtractionFailed,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Verdict::Correct => "CORRECT",
            Verdict::ResultMismatch => "RESULT_MISMATCH",
            Verdict::ExecutionFailed => "EXECUTION_FAILED",
            Verdict::GoldFailed => "GOLD_FAILED",
            Verdict::Timeout => "TIMEOUT",
            Verdict::ExtractionFailed => "EXTRACTION_FAILED",
        }
    }

    /// Failed extractions and executions (including timeouts): the
    /// syntax-quality signal reported alongside accuracy.
    pub fn is_failure(self) -> bool {
        matches!(
            self,
            Verdict::ExecutionFailed | Verdict::Timeout | Verdict::ExtractionFailed
        )
    }
}

/// Outcome for one benchmark item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationOutcome {
    pub key: PredictionKey,
    pub verdict: Verdict,
    pub detail: String,
    pub bucket: DifficultyBucket,
}

/// Accuracy rollup for one slice of the benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracySlice {
    pub total: usize,
    pub gold_failed: usize,
    /// total - gold_failed; broken gold queries measure the dataset, not
    /// the model, and are excluded from the denominator.
    pub denominator: usize,
    pub correct: usize,
    /// correct / denominator, absent when the denominator is zero.
    pub accuracy: Option<f64>,
}

impl AccuracySlice {
    fn tally(outcomes: &[&EvaluationOutcome]) -> AccuracySlice {
        let total = outcomes.len();
        let gold_failed = outcomes
            .iter()
            .filter(|o| o.verdict == Verdict::GoldFailed)
            .count();
        let correct = outcomes
            .iter()
            .filter(|o| o.verdict == Verdict::Correct)
            .count();
        let denominator = total - gold_failed;
        AccuracySlice {
            total,
            gold_failed,
            denominator,
            correct,
            accuracy: (denominator > 0).then(|| correct as f64 / denominator as f64),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub overall: AccuracySlice,
    pub per_bucket: BTreeMap<DifficultyBucket, AccuracySlice>,
    pub verdict_counts: BTreeMap<Verdict, usize>,
    /// EXECUTION_FAILED + TIMEOUT + EXTRACTION_FAILED.
    pub failure_count: usize,
    pub settings: CompareSettings,
    pub dataset_digest: Option<String>,
    pub items: Vec<EvaluationOutcome>,
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(
        "predictions incomplete: {missing} benchmark items have no prediction (first: {first})"
    )]
    IncompletePredictions { missing: usize, first: String },
    #[error("missing database for db_id \"{db_id}\" at {path}")]
    MissingDatabase { db_id: String, path: String },
    #[error(transparent)]
    File(#[from] crate::util::FileError),
}

/// Evaluation knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalSettings {
    pub compare: CompareSettings,
    /// Per-query statement timeout in seconds.
    pub timeout_secs: f64,
}

impl Default for EvalSettings {
    fn default() -> Self {
        EvalSettings {
            compare: CompareSettings::default(),
            timeout_secs: 30.0,
        }
    }
}

/// Does the gold query order its result? Parsed when possible, with a
/// token-scan fallback for queries outside the supported dialect.
pub fn gold_orders_rows(gold_sql: &str) -> bool {
    match parse_sql(gold_sql, &ParseOptions::default()) {
        Ok(ast) => !ast.root.order_by.is_empty(),
        Err(_) => {
            let lower = gold_sql.to_ascii_lowercase();
            let tokens: Vec<&str> = lower.split_whitespace().collect();
            tokens.windows(2).any(|w| w == ["order", "by"])
        }
    }
}

/// Evaluate a complete prediction set against its benchmark.
///
/// Per item: extract SQL (empty -> EXTRACTION_FAILED), execute the gold
/// query (errors -> GOLD_FAILED), execute the prediction (-> EXECUTION_FAILED
/// or TIMEOUT), then compare result sets (-> CORRECT or RESULT_MISMATCH).
pub fn evaluate(
    predictions: &[Prediction],
    benchmark: &[DatasetRecord],
    db_root: &Path,
    settings: &EvalSettings,
    dataset_digest: Option<String>,
) -> Result<EvaluationReport, EvalError> {
    let by_key: BTreeMap<(u64, &str), &Prediction> = predictions
        .iter()
        .map(|p| ((p.key.source_index, p.key.db_id.as_str()), p))
        .collect();

    let mut missing = Vec::new();
    for record in benchmark {
        if !by_key.contains_key(&(record.source_index, record.db_id.as_str())) {
            missing.push(format!("{}/{}", record.db_id, record.source_index));
        }
    }
    if !missing.is_empty() {
        return Err(EvalError::IncompletePredictions {
            missing: missing.len(),
            first: missing[0].clone(),
        });
    }

    for record in benchmark {
        let path = db_file_path(db_root, &record.db_id);
        if !path.exists() {
            return Err(EvalError::MissingDatabase {
                db_id: record.db_id.clone(),
                path: path.display().to_string(),
            });
        }
    }

    let timeout = Duration::from_secs_f64(settings.timeout_secs);
    let items: Vec<EvaluationOutcome> = benchmark
        .iter()
        .map(|record| {
            let prediction = by_key[&(record.source_index, record.db_id.as_str())];
            let (verdict, detail) = judge_item(record, prediction, db_root, settings, timeout);
            EvaluationOutcome {
                key: PredictionKey {
                    source_index: record.source_index,
                    db_id: record.db_id.clone(),
                },
                verdict,
                detail,
                bucket: record.bucket,
            }
        })
        .collect();

    let refs: Vec<&EvaluationOutcome> = items.iter().collect();
    let overall = AccuracySlice::tally(&refs);
    let per_bucket = DifficultyBucket::ALL
        .iter()
        .map(|&b| {
            let slice: Vec<&EvaluationOutcome> = items.iter().filter(|o| o.bucket == b).collect();
            (b, AccuracySlice::tally(&slice))
        })
        .collect();
    let mut verdict_counts: BTreeMap<Verdict, usize> =
        Verdict::ALL.iter().map(|&v| (v, 0)).collect();
    for item in &items {
        *verdict_counts
            .get_mut(&item.verdict)
            .expect("all verdicts present") += 1;
    }
    let failure_count = items.iter().filter(|o| o.verdict.is_failure()).count();

    Ok(EvaluationReport {
        overall,
        per_bucket,
        verdict_counts,
        failure_count,
        settings: settings.compare,
        dataset_digest,
        items,
    })
}

fn judge_item(
    record: &DatasetRecord,
    prediction: &Prediction,
    db_root: &Path,
    settings: &EvalSettings,
    timeout: Duration,
) -> (Verdict, String) {
    let extracted = extract_sql(&prediction.raw_output);
    if extracted.is_empty() {
        return (
            Verdict::ExtractionFailed,
            "no SQL found in model output".to_string(),
        );
    }

    let db_file = db_file_path(db_root, &record.db_id);
    let gold = match execute_query(&db_file, &record.gold_sql, timeout) {
        Ok(table) => table,
        Err(e) => return (Verdict::GoldFailed, format!("gold query failed: {e}")),
    };

    let pred = match execute_query(&db_file, &extracted, timeout) {
        Ok(table) => table,
        Err(ExecFailure::Timeout) => return (Verdict::Timeout, "prediction timed out".to_string()),
        Err(e) => return (Verdict::ExecutionFailed, e.to_string()),
    };

    let ordered = gold_orders_rows(&record.gold_sql);
    if compare_results(&gold, &pred, ordered, &settings.compare) {
        (Verdict::Correct, String::new())
    } else {
        (
            Verdict::ResultMismatch,
            format!(
                "result sets differ (gold {}x{}, prediction {}x{})",
                gold.rows.len(),
                gold.columns.len(),
                pred.rows.len(),
                pred.columns.len()
            ),
        )
    }
}

/// SHA-256 digests of every database file a benchmark touches, keyed by
/// db_id. Taken before and after a run to prove the shadow databases were
/// never written.
pub fn database_digests(
    benchmark: &[DatasetRecord],
    db_root: &Path,
) -> Result<BTreeMap<String, String>, EvalError> {
    let mut out = BTreeMap::new();
    for record in benchmark {
        if !out.contains_key(&record.db_id) {
            let path = db_file_path(db_root, &record.db_id);
            out.insert(record.db_id.clone(), sha256_file(&path)?);
        }
    }
    Ok(out)
}

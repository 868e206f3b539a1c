//! Run comparison tables and figure-feeding CSV series.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complexity::DifficultyBucket;
use crate::evaluator::{EvaluationReport, Verdict};
use crate::util::{fmt_pct, FileError};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("run \"{run}\": report file missing or unreadable at {path}")]
    MissingReport { run: String, path: String },
    #[error("run \"{run}\": report file does not parse: {message}")]
    BadReport { run: String, message: String },
    #[error("duplicate run name \"{0}\" in ledger")]
    DuplicateRun(String),
    #[error("ledger file {path} does not parse: {message}")]
    BadLedger { path: String, message: String },
    #[error(transparent)]
    File(#[from] FileError),
}

/// One evaluated run: labels plus a pointer to its evaluation report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerRun {
    pub name: String,
    pub model: String,
    pub training_method: String,
    pub dataset: String,
    /// Path to the evaluation report JSON, relative to the ledger file.
    pub report: PathBuf,
    /// Optional figure group ("large" or "small"); ungrouped runs appear in
    /// the comparison and the error breakdown only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
}

/// The set of runs a comparison is rendered from, in render order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLedger {
    pub runs: Vec<LedgerRun>,
}

impl RunLedger {
    pub fn validate(&self) -> Result<(), ReportError> {
        let mut seen = std::collections::HashSet::new();
        for run in &self.runs {
            if !seen.insert(run.name.as_str()) {
                return Err(ReportError::DuplicateRun(run.name.clone()));
            }
        }
        Ok(())
    }
}

/// Load a ledger file (JSON).
pub fn load_ledger(path: &Path) -> Result<RunLedger, ReportError> {
    let text = std::fs::read_to_string(path).map_err(|e| crate::util::io_err(path, e))?;
    let ledger: RunLedger = serde_json::from_str(&text).map_err(|e| ReportError::BadLedger {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    ledger.validate()?;
    Ok(ledger)
}

/// A ledger run paired with its loaded report.
pub struct LoadedRun<'a> {
    pub run: &'a LedgerRun,
    pub report: EvaluationReport,
}

/// Resolve and load every report referenced by the ledger. Paths are
/// resolved relative to `base_dir` (normally the ledger file's directory).
pub fn load_runs<'a>(
    ledger: &'a RunLedger,
    base_dir: &Path,
) -> Result<Vec<LoadedRun<'a>>, ReportError> {
    ledger.validate()?;
    let mut out = Vec::with_capacity(ledger.runs.len());
    for run in &ledger.runs {
        let path = if run.report.is_absolute() {
            run.report.clone()
        } else {
            base_dir.join(&run.report)
        };
        let text = std::fs::read_to_string(&path).map_err(|_| ReportError::MissingReport {
            run: run.name.clone(),
            path: path.display().to_string(),
        })?;
        let report: EvaluationReport =
            serde_json::from_str(&text).map_err(|e| ReportError::BadReport {
                run: run.name.clone(),
                message: e.to_string(),
            })?;
        out.push(LoadedRun { run, report });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Markdown,
    Csv,
}

impl std::str::FromStr for TableFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "markdown" | "md" => Ok(TableFormat::Markdown),
            "csv" => Ok(TableFormat::Csv),
            other => Err(format!(
                "unknown format: {other} (expected markdown or csv)"
            )),
        }
    }
}

fn pct_cell(accuracy: Option<f64>, format: TableFormat) -> String {
    match (accuracy, format) {
        (Some(a), TableFormat::Markdown) => format!("{}%", fmt_pct(a)),
        (Some(a), TableFormat::Csv) => fmt_pct(a),
        (None, TableFormat::Markdown) => "-".to_string(),
        (None, TableFormat::Csv) => String::new(),
    }
}

/// Render the comparative accuracy table: one row per run with overall and
/// per-bucket execution accuracy plus the failed-extraction/execution count.
pub fn render_comparison(runs: &[LoadedRun<'_>], format: TableFormat) -> String {
    let mut out = String::new();
    match format {
        TableFormat::Markdown => {
            out.push_str("| Run | Model | Training Method | Dataset | Exec Acc | Easy Acc | Medium Acc | Hard Acc | Failures |\n");
            out.push_str("|-----|-------|-----------------|---------|----------|----------|------------|----------|----------|\n");
            for loaded in runs {
                let r = &loaded.report;
                out.push_str(&format!(
                    "| {} | {} | {} | {} | {} | {} | {} | {} | {} |\n",
                    loaded.run.name,
                    loaded.run.model,
                    loaded.run.training_method,
                    loaded.run.dataset,
                    pct_cell(r.overall.accuracy, format),
                    pct_cell(r.per_bucket[&DifficultyBucket::Easy].accuracy, format),
                    pct_cell(r.per_bucket[&DifficultyBucket::Medium].accuracy, format),
                    pct_cell(r.per_bucket[&DifficultyBucket::Hard].accuracy, format),
                    r.failure_count
                ));
            }
        }
        TableFormat::Csv => {
            out.push_str(
                "run,model,training_method,dataset,exec_acc_pct,easy_acc_pct,medium_acc_pct,hard_acc_pct,failures\n",
            );
            for loaded in runs {
                let r = &loaded.report;
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{}\n",
                    csv_escape(&loaded.run.name),
                    csv_escape(&loaded.run.model),
                    csv_escape(&loaded.run.training_method),
                    csv_escape(&loaded.run.dataset),
                    pct_cell(r.overall.accuracy, format),
                    pct_cell(r.per_bucket[&DifficultyBucket::Easy].accuracy, format),
                    pct_cell(r.per_bucket[&DifficultyBucket::Medium].accuracy, format),
                    pct_cell(r.per_bucket[&DifficultyBucket::Hard].accuracy, format),
                    r.failure_count
                ));
            }
        }
    }
    out
}

fn csv_escape(value: &str) -> String {
    if value.contains([',', '"', '\n']) {
        format!("\"{}\"", value.replace('"', "\"\""))
    } else {
        value.to_string()
    }
}

/// Accuracy series for one figure group ("large" or "small").
pub fn render_accuracy_series(runs: &[LoadedRun<'_>], group: &str) -> String {
    let mut out = String::from("run,model,exec_acc_pct\n");
    for loaded in runs {
        if loaded.run.group.as_deref() != Some(group) {
            continue;
        }
        out.push_str(&format!(
            "{},{},{}\n",
            csv_escape(&loaded.run.name),
            csv_escape(&loaded.run.model),
            pct_cell(loaded.report.overall.accuracy, TableFormat::Csv)
        ));
    }
    out
}

/// Verdict counts per run, long format, for error-breakdown charts.
pub fn render_error_breakdown(runs: &[LoadedRun<'_>]) -> String {
    let mut out = String::from("run,verdict,count\n");
    for loaded in runs {
        for verdict in Verdict::ALL {
            let count = loaded
                .report
                .verdict_counts
                .get(&verdict)
                .copied()
                .unwrap_or(0);
            out.push_str(&format!(
                "{},{},{}\n",
                csv_escape(&loaded.run.name),
                verdict.label(),
                count
            ));
        }
    }
    out
}

/// Human-readable summary of one evaluation, printed after `evaluate`.
pub fn render_evaluation_summary(report: &EvaluationReport) -> String {
    let mut out = String::new();
    let overall = &report.overall;
    out.push_str(&format!(
        "items: {}  gold_failed: {}  denominator: {}  correct: {}  accuracy: {}\n",
        overall.total,
        overall.gold_failed,
        overall.denominator,
        overall.correct,
        pct_cell(overall.accuracy, TableFormat::Markdown)
    ));
    out.push_str("| Bucket | Items | Correct | Accuracy |\n");
    out.push_str("|--------|-------|---------|----------|\n");
    for bucket in DifficultyBucket::ALL {
        let slice = &report.per_bucket[&bucket];
        out.push_str(&format!(
            "| {} | {} | {} | {} |\n",
            bucket.label(),
            slice.total,
            slice.correct,
            pct_cell(slice.accuracy, TableFormat::Markdown)
        ));
    }
    out.push_str("verdicts:");
    for verdict in Verdict::ALL {
        let count = report.verdict_counts.get(&verdict).copied().unwrap_or(0);
        if count > 0 {
            out.push_str(&format!(" {}={}", verdict.label(), count));
        }
    }
    out.push('\n');
    out.push_str(&format!(
        "failures (extraction/execution/timeout): {}\n",
        report.failure_count
    ));
    out
}

/// Convenience map for tests and callers: verdict label -> count.
pub fn verdict_counts_by_label(report: &EvaluationReport) -> BTreeMap<&'static str, usize> {
    Verdict::ALL
        .iter()
        .map(|&v| {
            (
                v.label(),
                report.verdict_counts.get(&v).copied().unwrap_or(0),
            )
        })
        .collect()
}

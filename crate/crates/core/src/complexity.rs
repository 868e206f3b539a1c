//! Recursive complexity scoring and difficulty bucketing.
//!
//! A query earns points for each join connector and for the presence of
//! GROUP BY, ORDER BY and HAVING on a select node, plus a nesting bonus and
//! the recursive score of every nested select. LIMIT, DISTINCT and aggregate
//! functions carry no points under the default weights.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::NlSqlExample;
use crate::sql::{clause_inventory, parse_sql, ClauseInventory, ParseError, ParseOptions};
use crate::util::{fmt_count, fmt_score};

/// Points per clause occurrence. Defaults are 1.0 everywhere; they are
/// recorded in every curated dataset's manifest so runs stay reproducible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WeightsConfig {
    pub w_join: f64,
    pub w_group_by: f64,
    pub w_order_by: f64,
    pub w_having: f64,
    /// Added once per nested select, on top of the nested select's own
    /// recursive score.
    pub w_nesting: f64,
}

impl Default for WeightsConfig {
    fn default() -> Self {
        WeightsConfig {
            w_join: 1.0,
            w_group_by: 1.0,
            w_order_by: 1.0,
            w_having: 1.0,
            w_nesting: 1.0,
        }
    }
}

impl WeightsConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let all = [
            self.w_join,
            self.w_group_by,
            self.w_order_by,
            self.w_having,
            self.w_nesting,
        ];
        if all.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(ConfigError::NegativeWeight);
        }
        Ok(())
    }
}

/// Bucket boundaries. `score <= easy_max` is Easy, `score <= medium_max` is
/// Medium, anything above is Hard.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ThresholdsConfig {
    pub easy_max: f64,
    pub medium_max: f64,
}

impl Default for ThresholdsConfig {
    fn default() -> Self {
        ThresholdsConfig {
            easy_max: 1.0,
            medium_max: 3.0,
        }
    }
}

impl ThresholdsConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.easy_max >= 0.0 && self.easy_max < self.medium_max) {
            return Err(ConfigError::BadThresholds {
                easy_max: self.easy_max,
                medium_max: self.medium_max,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("weights must be non-negative finite numbers")]
    NegativeWeight,
    #[error("thresholds must satisfy 0 <= easy_max ({easy_max}) < medium_max ({medium_max})")]
    BadThresholds { easy_max: f64, medium_max: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DifficultyBucket {
    Easy,
    Medium,
    Hard,
}

impl DifficultyBucket {
    pub const ALL: [DifficultyBucket; 3] = [
        DifficultyBucket::Easy,
        DifficultyBucket::Medium,
        DifficultyBucket::Hard,
    ];

    pub fn label(self) -> &'static str {
        match self {
            DifficultyBucket::Easy => "Easy",
            DifficultyBucket::Medium => "Medium",
            DifficultyBucket::Hard => "Hard",
        }
    }
}

impl std::fmt::Display for DifficultyBucket {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for DifficultyBucket {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "easy" => Ok(DifficultyBucket::Easy),
            "medium" => Ok(DifficultyBucket::Medium),
            "hard" => Ok(DifficultyBucket::Hard),
            other => Err(format!("unknown difficulty bucket: {other}")),
        }
    }
}

/// An example with its score, bucket and clause inventory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredExample {
    pub example: NlSqlExample,
    pub score: f64,
    pub bucket: DifficultyBucket,
    pub inventory: ClauseInventory,
}

/// Score one clause inventory.
pub fn score_query(inventory: &ClauseInventory, weights: &WeightsConfig) -> f64 {
    let flag = |b: bool| if b { 1.0 } else { 0.0 };
    let mut score = weights.w_join * f64::from(inventory.join_count)
        + weights.w_group_by * flag(inventory.has_group_by)
        + weights.w_order_by * flag(inventory.has_order_by)
        + weights.w_having * flag(inventory.has_having);
    for sub in &inventory.subqueries {
        score += weights.w_nesting + score_query(sub, weights);
    }
    score
}

/// Assign the difficulty bucket for a score.
pub fn bucket(score: f64, thresholds: &ThresholdsConfig) -> DifficultyBucket {
    if score <= thresholds.easy_max {
        DifficultyBucket::Easy
    } else if score <= thresholds.medium_max {
        DifficultyBucket::Medium
    } else {
        DifficultyBucket::Hard
    }
}

/// Per-bucket count and score statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketStats {
    pub bucket: DifficultyBucket,
    pub count: usize,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub median: Option<f64>,
}

/// The per-bucket shape of a scored corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionSummary {
    pub total: usize,
    pub skipped: usize,
    pub buckets: Vec<BucketStats>,
}

impl DistributionSummary {
    pub fn stats(&self, bucket: DifficultyBucket) -> &BucketStats {
        self.buckets
            .iter()
            .find(|b| b.bucket == bucket)
            .expect("summary always carries all three buckets")
    }

    /// Render as a difficulty-distribution table.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        out.push_str("| Difficulty | Query Count | Complexity Score Range | Median Score |\n");
        out.push_str("|------------|-------------|------------------------|--------------|\n");
        for stats in &self.buckets {
            let range = match (stats.min, stats.max) {
                (Some(min), Some(max)) => {
                    format!("{} (Min) - {} (Max)", fmt_score(min), fmt_score(max))
                }
                _ => "-".to_string(),
            };
            let median = stats.median.map_or("-".to_string(), fmt_score);
            out.push_str(&format!(
                "| {} | {} | {} | {} |\n",
                stats.bucket.label(),
                fmt_count(stats.count),
                range,
                median
            ));
        }
        out
    }
}

/// An input example whose gold SQL did not parse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedExample {
    pub source_index: u64,
    pub db_id: String,
    pub reason: String,
}

/// Result of scoring a whole corpus: parseable examples scored and
/// bucketed, unparseable ones listed with reasons.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusScoring {
    pub scored: Vec<ScoredExample>,
    pub skipped: Vec<SkippedExample>,
    pub summary: DistributionSummary,
}

/// Score every example. Parse failures are collected, never silently
/// dropped.
pub fn score_corpus(
    examples: &[NlSqlExample],
    weights: &WeightsConfig,
    thresholds: &ThresholdsConfig,
) -> Result<CorpusScoring, ConfigError> {
    weights.validate()?;
    thresholds.validate()?;

    let options = ParseOptions::default();
    let mut scored = Vec::with_capacity(examples.len());
    let mut skipped = Vec::new();
    for example in examples {
        match parse_sql(&example.gold_sql, &options) {
            Ok(ast) => {
                let inventory = clause_inventory(&ast);
                let score = score_query(&inventory, weights);
                scored.push(ScoredExample {
                    example: example.clone(),
                    score,
                    bucket: bucket(score, thresholds),
                    inventory,
                });
            }
            Err(err @ (ParseError::Syntax { .. } | ParseError::UnsupportedStatement { .. })) => {
                skipped.push(SkippedExample {
                    source_index: example.source_index,
                    db_id: example.db_id.clone(),
                    reason: err.to_string(),
                });
            }
        }
    }

    let summary = summarize(&scored, skipped.len());
    Ok(CorpusScoring {
        scored,
        skipped,
        summary,
    })
}

/// Build the per-bucket distribution of already-scored examples.
pub fn summarize(scored: &[ScoredExample], skipped: usize) -> DistributionSummary {
    let buckets = DifficultyBucket::ALL
        .iter()
        .map(|&b| {
            let mut scores: Vec<f64> = scored
                .iter()
                .filter(|s| s.bucket == b)
                .map(|s| s.score)
                .collect();
            scores.sort_by(|a, b| a.partial_cmp(b).expect("scores are finite"));
            BucketStats {
                bucket: b,
                count: scores.len(),
                min: scores.first().copied(),
                max: scores.last().copied(),
                median: median_of_sorted(&scores),
            }
        })
        .collect();
    DistributionSummary {
        total: scored.len(),
        skipped,
        buckets,
    }
}

fn median_of_sorted(sorted: &[f64]) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let mid = sorted.len() / 2;
    Some(if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    })
}

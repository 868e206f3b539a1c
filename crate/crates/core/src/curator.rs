//! Deterministic stratified curation: build training sets and benchmarks
//! with exact per-bucket counts.
//!
//! All sampling is driven by a ChaCha8 stream seeded from the manifest seed,
//! with a hand-rolled Fisher-Yates shuffle, so identical inputs produce
//! byte-identical outputs across platforms and releases.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complexity::{
    bucket, score_query, DifficultyBucket, ScoredExample, ThresholdsConfig, WeightsConfig,
};
use crate::corpus::NlSqlExample;
use crate::sql::{clause_inventory, parse_sql, ParseOptions};
use crate::util::{read_jsonl, sha256_file, write_jsonl, FileError};

#[derive(Debug, Error)]
pub enum CurateError {
    #[error("invalid distribution spec: {0}")]
    InvalidSpec(String),
    #[error("bucket {bucket} has {available} examples available, {required} required")]
    InsufficientBucket {
        bucket: DifficultyBucket,
        available: usize,
        required: usize,
    },
    #[error("train_count + val_count = {requested} does not match dataset size {actual}")]
    SizeMismatch { requested: usize, actual: usize },
    #[error("duplicate source_index {0} in dataset")]
    DuplicateSourceIndex(u64),
    #[error(transparent)]
    File(#[from] FileError),
    #[error("dataset file {path}, line {line}: {message}")]
    Record {
        path: String,
        line: usize,
        message: String,
    },
}

/// Target difficulty mix for a curated dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistributionSpec {
    pub hard: f64,
    pub medium: f64,
    pub easy: f64,
    pub total: usize,
}

impl DistributionSpec {
    pub fn validate(&self) -> Result<(), CurateError> {
        let fractions = [self.hard, self.medium, self.easy];
        if fractions.iter().any(|f| !f.is_finite() || *f < 0.0) {
            return Err(CurateError::InvalidSpec(
                "fractions must be non-negative".to_string(),
            ));
        }
        let sum: f64 = fractions.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(CurateError::InvalidSpec(format!(
                "fractions sum to {sum}, expected 1"
            )));
        }
        if self.total == 0 {
            return Err(CurateError::InvalidSpec(
                "total must be positive".to_string(),
            ));
        }
        Ok(())
    }

    fn fraction(&self, bucket: DifficultyBucket) -> f64 {
        match bucket {
            DifficultyBucket::Easy => self.easy,
            DifficultyBucket::Medium => self.medium,
            DifficultyBucket::Hard => self.hard,
        }
    }

    /// Exact per-bucket targets via largest-remainder apportionment.
    pub fn targets(&self) -> BTreeMap<DifficultyBucket, usize> {
        let quotas: Vec<(DifficultyBucket, f64)> = DifficultyBucket::ALL
            .iter()
            .map(|&b| (b, self.fraction(b) * self.total as f64))
            .collect();
        apportion(&quotas, self.total)
    }
}

/// Largest-remainder rounding: floor every quota, then hand the remaining
/// units to the largest fractional parts (ties broken by bucket order).
fn apportion(
    quotas: &[(DifficultyBucket, f64)],
    total: usize,
) -> BTreeMap<DifficultyBucket, usize> {
    let mut out = BTreeMap::new();
    let mut remainders: Vec<(DifficultyBucket, f64)> = Vec::with_capacity(quotas.len());
    let mut assigned = 0usize;
    for &(bucket, quota) in quotas {
        let base = quota.floor() as usize;
        out.insert(bucket, base);
        assigned += base;
        remainders.push((bucket, quota - quota.floor()));
    }
    let mut leftover = total.saturating_sub(assigned);
    remainders.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .expect("finite remainders")
            .then(a.0.cmp(&b.0))
    });
    for (bucket, _) in remainders {
        if leftover == 0 {
            break;
        }
        *out.get_mut(&bucket).expect("bucket present") += 1;
        leftover -= 1;
    }
    out
}

/// Everything needed to reproduce a curated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub weights: WeightsConfig,
    pub thresholds: ThresholdsConfig,
    pub distribution: DistributionSpec,
    pub targets: BTreeMap<DifficultyBucket, usize>,
    /// SHA-256 of the source file the pool was loaded from, when known.
    pub source_digest: Option<String>,
    pub bucket_counts: BTreeMap<DifficultyBucket, usize>,
    pub total: usize,
}

/// A curated dataset plus its manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct CuratedDataset {
    pub items: Vec<ScoredExample>,
    pub manifest: Manifest,
}

impl CuratedDataset {
    /// Wrap an already-scored pool. The manifest records the observed
    /// distribution rather than a sampling target, so scored files can be
    /// used as datasets directly (pass-through mode).
    pub fn from_scored_pool(
        items: Vec<ScoredExample>,
        weights: &WeightsConfig,
        thresholds: &ThresholdsConfig,
        source_digest: Option<String>,
    ) -> CuratedDataset {
        let bucket_counts = Self::bucket_counts(&items);
        let total = items.len();
        let fraction = |b: DifficultyBucket| {
            if total == 0 {
                1.0 / 3.0
            } else {
                bucket_counts[&b] as f64 / total as f64
            }
        };
        CuratedDataset {
            manifest: Manifest {
                seed: 0,
                weights: *weights,
                thresholds: *thresholds,
                distribution: DistributionSpec {
                    hard: fraction(DifficultyBucket::Hard),
                    medium: fraction(DifficultyBucket::Medium),
                    easy: fraction(DifficultyBucket::Easy),
                    total: total.max(1),
                },
                targets: bucket_counts.clone(),
                source_digest,
                bucket_counts,
                total,
            },
            items,
        }
    }

    pub fn bucket_counts(items: &[ScoredExample]) -> BTreeMap<DifficultyBucket, usize> {
        let mut counts: BTreeMap<DifficultyBucket, usize> =
            DifficultyBucket::ALL.iter().map(|&b| (b, 0)).collect();
        for item in items {
            *counts.get_mut(&item.bucket).expect("all buckets present") += 1;
        }
        counts
    }

    fn check_unique(items: &[ScoredExample]) -> Result<(), CurateError> {
        let mut seen = HashSet::new();
        for item in items {
            if !seen.insert(item.example.source_index) {
                return Err(CurateError::DuplicateSourceIndex(item.example.source_index));
            }
        }
        Ok(())
    }
}

fn lemire_bounded(rng: &mut ChaCha8Rng, n: u64) -> u64 {
    ((u128::from(rng.next_u64()) * u128::from(n)) >> 64) as u64
}

fn shuffle<T>(items: &mut [T], rng: &mut ChaCha8Rng) {
    for i in (1..items.len()).rev() {
        let j = lemire_bounded(rng, (i + 1) as u64) as usize;
        items.swap(i, j);
    }
}

/// Draw exactly the spec's per-bucket targets from `pool` by seeded shuffle.
/// Fails loudly when a bucket cannot be filled; never rebalances.
pub fn stratified_curate(
    pool: &[ScoredExample],
    spec: &DistributionSpec,
    weights: &WeightsConfig,
    thresholds: &ThresholdsConfig,
    seed: u64,
    source_digest: Option<String>,
) -> Result<CuratedDataset, CurateError> {
    spec.validate()?;
    let targets = spec.targets();

    let mut by_bucket: BTreeMap<DifficultyBucket, Vec<&ScoredExample>> = DifficultyBucket::ALL
        .iter()
        .map(|&b| (b, Vec::new()))
        .collect();
    for item in pool {
        by_bucket
            .get_mut(&item.bucket)
            .expect("all buckets present")
            .push(item);
    }

    for (&bucket, &required) in &targets {
        let available = by_bucket[&bucket].len();
        if available < required {
            return Err(CurateError::InsufficientBucket {
                bucket,
                available,
                required,
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut items: Vec<ScoredExample> = Vec::with_capacity(spec.total);
    for &bucket in &DifficultyBucket::ALL {
        let picked = by_bucket.get_mut(&bucket).expect("all buckets present");
        shuffle(picked, &mut rng);
        items.extend(picked.iter().take(targets[&bucket]).map(|&x| x.clone()));
    }
    shuffle(&mut items, &mut rng);

    CuratedDataset::check_unique(&items)?;
    let bucket_counts = CuratedDataset::bucket_counts(&items);
    debug_assert_eq!(bucket_counts, targets);

    Ok(CuratedDataset {
        manifest: Manifest {
            seed,
            weights: *weights,
            thresholds: *thresholds,
            distribution: *spec,
            targets,
            source_digest,
            bucket_counts,
            total: items.len(),
        },
        items,
    })
}

/// Split a curated dataset into train and validation parts, stratified per
/// bucket with largest-remainder rounding, deterministic under `seed`.
pub fn split_train_val(
    dataset: &CuratedDataset,
    train_count: usize,
    val_count: usize,
    seed: u64,
) -> Result<(CuratedDataset, CuratedDataset), CurateError> {
    if train_count + val_count != dataset.items.len() {
        return Err(CurateError::SizeMismatch {
            requested: train_count + val_count,
            actual: dataset.items.len(),
        });
    }

    let mut by_bucket: BTreeMap<DifficultyBucket, Vec<&ScoredExample>> = DifficultyBucket::ALL
        .iter()
        .map(|&b| (b, Vec::new()))
        .collect();
    for item in &dataset.items {
        by_bucket
            .get_mut(&item.bucket)
            .expect("all buckets present")
            .push(item);
    }

    // Apportion the validation count across buckets proportionally to
    // bucket sizes.
    let total = dataset.items.len() as f64;
    let quotas: Vec<(DifficultyBucket, f64)> = DifficultyBucket::ALL
        .iter()
        .map(|&b| (b, by_bucket[&b].len() as f64 * val_count as f64 / total))
        .collect();
    let val_targets = apportion(&quotas, val_count);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_items = Vec::with_capacity(train_count);
    let mut val_items = Vec::with_capacity(val_count);
    for &bucket in &DifficultyBucket::ALL {
        let members = by_bucket.get_mut(&bucket).expect("all buckets present");
        shuffle(members, &mut rng);
        let take_val = val_targets[&bucket];
        if take_val > members.len() {
            return Err(CurateError::InsufficientBucket {
                bucket,
                available: members.len(),
                required: take_val,
            });
        }
        val_items.extend(members.iter().take(take_val).map(|&x| x.clone()));
        train_items.extend(members.iter().skip(take_val).map(|&x| x.clone()));
    }
    shuffle(&mut train_items, &mut rng);
    shuffle(&mut val_items, &mut rng);

    let make = |items: Vec<ScoredExample>| {
        let bucket_counts = CuratedDataset::bucket_counts(&items);
        CuratedDataset {
            manifest: Manifest {
                seed,
                weights: dataset.manifest.weights,
                thresholds: dataset.manifest.thresholds,
                distribution: dataset.manifest.distribution,
                targets: bucket_counts.clone(),
                source_digest: dataset.manifest.source_digest.clone(),
                bucket_counts,
                total: items.len(),
            },
            items,
        }
    };
    Ok((make(train_items), make(val_items)))
}

/// Build a benchmark disjoint from `exclude`, by source_index and by exact
/// (question, gold SQL) pair.
pub fn build_benchmark(
    pool: &[ScoredExample],
    spec: &DistributionSpec,
    exclude: &[ScoredExample],
    weights: &WeightsConfig,
    thresholds: &ThresholdsConfig,
    seed: u64,
    source_digest: Option<String>,
) -> Result<CuratedDataset, CurateError> {
    let excluded_indices: HashSet<u64> = exclude.iter().map(|x| x.example.source_index).collect();
    let excluded_pairs: HashSet<(&str, &str)> = exclude
        .iter()
        .map(|x| (x.example.question.as_str(), x.example.gold_sql.as_str()))
        .collect();

    let filtered: Vec<ScoredExample> = pool
        .iter()
        .filter(|x| {
            !excluded_indices.contains(&x.example.source_index)
                && !excluded_pairs
                    .contains(&(x.example.question.as_str(), x.example.gold_sql.as_str()))
        })
        .cloned()
        .collect();

    let benchmark = stratified_curate(&filtered, spec, weights, thresholds, seed, source_digest)?;

    debug_assert!(benchmark.items.iter().all(|x| {
        !excluded_indices.contains(&x.example.source_index)
            && !excluded_pairs.contains(&(x.example.question.as_str(), x.example.gold_sql.as_str()))
    }));
    Ok(benchmark)
}

/// One line of a scored / curated dataset file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub question: String,
    pub gold_sql: String,
    pub db_id: String,
    pub source_index: u64,
    pub score: f64,
    pub bucket: DifficultyBucket,
}

impl DatasetRecord {
    pub fn from_scored(s: &ScoredExample) -> Self {
        DatasetRecord {
            question: s.example.question.clone(),
            gold_sql: s.example.gold_sql.clone(),
            db_id: s.example.db_id.clone(),
            source_index: s.example.source_index,
            score: s.score,
            bucket: s.bucket,
        }
    }

    pub fn into_example(self) -> NlSqlExample {
        NlSqlExample {
            question: self.question,
            gold_sql: self.gold_sql,
            db_id: self.db_id,
            source_index: self.source_index,
        }
    }
}

fn manifest_path(dataset_path: &Path) -> std::path::PathBuf {
    let mut name = dataset_path.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    dataset_path.with_file_name(name)
}

/// Write dataset records plus the manifest sidecar
/// (`<path>.manifest.json`).
pub fn write_dataset(path: &Path, dataset: &CuratedDataset) -> Result<(), CurateError> {
    let records: Vec<DatasetRecord> = dataset
        .items
        .iter()
        .map(DatasetRecord::from_scored)
        .collect();
    write_jsonl(path, &records)?;
    write_manifest(path, &dataset.manifest)
}

/// Write just the manifest sidecar for a dataset file.
pub fn write_manifest(dataset_path: &Path, manifest: &Manifest) -> Result<(), CurateError> {
    let text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    crate::util::write_text(&manifest_path(dataset_path), &text)?;
    Ok(())
}

/// Load dataset records only (no manifest required).
pub fn read_dataset_records(path: &Path) -> Result<Vec<DatasetRecord>, CurateError> {
    Ok(read_jsonl(path)?)
}

/// Load a curated dataset with its manifest sidecar. Clause inventories are
/// rebuilt by re-parsing each gold query.
pub fn read_dataset(path: &Path) -> Result<CuratedDataset, CurateError> {
    let records = read_dataset_records(path)?;

    let options = ParseOptions::default();
    let mut items = Vec::with_capacity(records.len());
    for (i, record) in records.into_iter().enumerate() {
        let ast = parse_sql(&record.gold_sql, &options).map_err(|e| CurateError::Record {
            path: path.display().to_string(),
            line: i + 1,
            message: format!("gold SQL does not parse: {e}"),
        })?;
        let inventory = clause_inventory(&ast);
        let score = record.score;
        let bucket_label = record.bucket;
        items.push(ScoredExample {
            example: record.into_example(),
            score,
            bucket: bucket_label,
            inventory,
        });
    }
    CuratedDataset::check_unique(&items)?;

    let manifest_file = manifest_path(path);
    if manifest_file.exists() {
        let text = std::fs::read_to_string(&manifest_file)
            .map_err(|e| crate::util::io_err(&manifest_file, e))?;
        let manifest: Manifest = serde_json::from_str(&text).map_err(|e| CurateError::Record {
            path: manifest_file.display().to_string(),
            line: 0,
            message: e.to_string(),
        })?;
        let bucket_counts = CuratedDataset::bucket_counts(&items);
        let total = items.len();
        Ok(CuratedDataset {
            items,
            manifest: Manifest {
                bucket_counts,
                total,
                ..manifest
            },
        })
    } else {
        // Files without a sidecar (hand-made pools) still load; the
        // manifest then records the observed shape under default configs.
        Ok(CuratedDataset::from_scored_pool(
            items,
            &WeightsConfig::default(),
            &ThresholdsConfig::default(),
            sha256_file(path).ok(),
        ))
    }
}

/// Score and bucket a pool loaded from a dataset file, using the stated
/// configs rather than whatever the file recorded.
pub fn rescore_records(
    records: Vec<DatasetRecord>,
    weights: &WeightsConfig,
    thresholds: &ThresholdsConfig,
) -> Result<Vec<ScoredExample>, CurateError> {
    let options = ParseOptions::default();
    let mut out = Vec::with_capacity(records.len());
    for (i, record) in records.into_iter().enumerate() {
        let ast = parse_sql(&record.gold_sql, &options).map_err(|e| CurateError::Record {
            path: "<records>".to_string(),
            line: i + 1,
            message: format!("gold SQL does not parse: {e}"),
        })?;
        let inventory = clause_inventory(&ast);
        let score = score_query(&inventory, weights);
        out.push(ScoredExample {
            example: record.into_example(),
            score,
            bucket: bucket(score, thresholds),
            inventory,
        });
    }
    Ok(out)
}

//! Batch inference against a chat-completion HTTP endpoint.
//!
//! Requests fan out over a bounded worker pool; completed predictions are
//! appended to a journal as they land, so an interrupted run resumes
//! without re-querying finished items. The final prediction file is written
//! in benchmark order once every item has an outcome.

use std::collections::{BTreeMap, VecDeque};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{NlSqlExample, SchemaDescription};
use crate::cot::{user_content, Message, Role, COT_SYSTEM_PROMPT};
use crate::curator::DatasetRecord;
use crate::util::{read_jsonl, write_jsonl, FileError};

/// System prompt for direct (no-reasoning) inference.
pub const DIRECT_SYSTEM_PROMPT: &str = "You are a text-to-SQL model. Answer the user's question by generating a single SQL query against the given database schema. Output only the final SQL query in a markdown code block.";

/// Appended to the system prompt when self-correction is enabled.
pub const SELF_CORRECTION_PROMPT: &str = "Before outputting the final SQL, re-verify column names and syntax against the provided schema.";

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("auth token environment variable \"{var}\" is not set")]
    AuthMissing { var: String },
    #[error("no schema description provided for db_id \"{db_id}\"")]
    MissingDescription { db_id: String },
    #[error("invalid endpoint config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    File(#[from] FileError),
}

/// Where and how to reach the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EndpointConfig {
    /// Base URL; `/chat/completions` is appended.
    pub base_url: String,
    pub model: String,
    /// Name of the environment variable holding the bearer token; None for
    /// unauthenticated endpoints.
    pub token_env: Option<String>,
    pub timeout_secs: f64,
    pub max_retries: u32,
    pub backoff_base_secs: f64,
    pub backoff_multiplier: f64,
    pub max_concurrent: usize,
    pub temperature: f64,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        EndpointConfig {
            base_url: "http://127.0.0.1:8080/v1".to_string(),
            model: "default".to_string(),
            token_env: None,
            timeout_secs: 60.0,
            max_retries: 3,
            backoff_base_secs: 0.5,
            backoff_multiplier: 2.0,
            max_concurrent: 4,
            temperature: 0.0,
        }
    }
}

impl EndpointConfig {
    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.max_concurrent < 1 {
            return Err(GatewayError::InvalidConfig(
                "max_concurrent must be at least 1".to_string(),
            ));
        }
        if !self.timeout_secs.is_finite() || self.timeout_secs <= 0.0 {
            return Err(GatewayError::InvalidConfig(
                "timeout must be positive".to_string(),
            ));
        }
        Ok(())
    }
}

/// Identity of one benchmark item.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PredictionKey {
    pub source_index: u64,
    pub db_id: String,
}

/// Raw model output for one item, plus request metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub key: PredictionKey,
    pub raw_output: String,
    pub latency_ms: u64,
    pub retries: u32,
    /// Transport-level failure after all retries; such items become
    /// no-output predictions rather than silent gaps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptMode {
    Direct,
    Cot,
}

impl std::str::FromStr for PromptMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "direct" => Ok(PromptMode::Direct),
            "cot" => Ok(PromptMode::Cot),
            other => Err(format!("unknown prompt mode: {other}")),
        }
    }
}

/// Render the messages for one inference request.
pub fn render_inference_prompt(
    example: &NlSqlExample,
    description: &SchemaDescription,
    mode: PromptMode,
    self_correction: bool,
) -> Vec<Message> {
    let mut system = match mode {
        PromptMode::Direct => DIRECT_SYSTEM_PROMPT.to_string(),
        PromptMode::Cot => COT_SYSTEM_PROMPT.to_string(),
    };
    if self_correction {
        system.push(' ');
        system.push_str(SELF_CORRECTION_PROMPT);
    }
    vec![
        Message::new(Role::System, system),
        Message::new(Role::User, user_content(example, description)),
    ]
}

/// Prompt construction inputs for a batch run.
#[derive(Debug, Clone)]
pub struct PromptOptions {
    pub mode: PromptMode,
    pub self_correction: bool,
    /// One rendered description per db_id appearing in the batch.
    pub descriptions: BTreeMap<String, SchemaDescription>,
}

fn journal_path(out_path: &Path) -> PathBuf {
    let mut name = out_path.file_name().unwrap_or_default().to_os_string();
    name.push(".journal");
    out_path.with_file_name(name)
}

fn meta_path(out_path: &Path) -> PathBuf {
    let mut name = out_path.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    out_path.with_file_name(name)
}

/// Journal lines that fail to parse (torn writes from an interrupted run)
/// are skipped.
fn read_journal(path: &Path) -> BTreeMap<PredictionKey, Prediction> {
    let mut out = BTreeMap::new();
    let Ok(text) = std::fs::read_to_string(path) else {
        return out;
    };
    for line in text.lines() {
        if let Ok(p) = serde_json::from_str::<Prediction>(line) {
            out.insert(p.key.clone(), p);
        }
    }
    out
}

/// Read a prediction file written by [`run_batch`].
pub fn read_predictions(path: &Path) -> Result<Vec<Prediction>, GatewayError> {
    Ok(read_jsonl(path)?)
}

/// Run batch inference for every dataset record, resuming from any previous
/// partial run at the same output path. Returns predictions in dataset
/// order.
pub fn run_batch(
    items: &[DatasetRecord],
    config: &EndpointConfig,
    options: &PromptOptions,
    out_path: &Path,
) -> Result<Vec<Prediction>, GatewayError> {
    config.validate()?;

    let token = match &config.token_env {
        Some(var) if !var.is_empty() => match std::env::var(var) {
            Ok(value) => Some(value),
            Err(_) => return Err(GatewayError::AuthMissing { var: var.clone() }),
        },
        _ => None,
    };

    for record in items {
        if !options.descriptions.contains_key(&record.db_id) {
            return Err(GatewayError::MissingDescription {
                db_id: record.db_id.clone(),
            });
        }
    }

    // Resume state: the final file (if a previous run completed) plus the
    // journal (if one was interrupted).
    let mut completed: BTreeMap<PredictionKey, Prediction> = BTreeMap::new();
    if out_path.exists() {
        if let Ok(existing) = read_predictions(out_path) {
            for p in existing {
                completed.insert(p.key.clone(), p);
            }
        }
    }
    for (key, p) in read_journal(&journal_path(out_path)) {
        completed.entry(key).or_insert(p);
    }

    let pending: Vec<&DatasetRecord> = items
        .iter()
        .filter(|r| {
            !completed.contains_key(&PredictionKey {
                source_index: r.source_index,
                db_id: r.db_id.clone(),
            })
        })
        .collect();

    if !pending.is_empty() {
        let journal_file = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(journal_path(out_path))
            .map_err(|e| crate::util::io_err(&journal_path(out_path), e))?;
        let journal = Mutex::new(journal_file);

        let queue: Mutex<VecDeque<&DatasetRecord>> = Mutex::new(pending.iter().copied().collect());
        let workers = config.max_concurrent.min(pending.len()).max(1);
        let (tx, rx) = mpsc::channel::<Prediction>();

        std::thread::scope(|scope| {
            for _ in 0..workers {
                let tx = tx.clone();
                let queue = &queue;
                let token = token.as_deref();
                scope.spawn(move || {
                    let agent = ureq::AgentBuilder::new()
                        .timeout(Duration::from_secs_f64(config.timeout_secs))
                        .build();
                    loop {
                        let record = {
                            let mut q = queue.lock().expect("queue lock");
                            q.pop_front()
                        };
                        let Some(record) = record else { break };
                        let description = &options.descriptions[&record.db_id];
                        let example = NlSqlExample {
                            question: record.question.clone(),
                            gold_sql: record.gold_sql.clone(),
                            db_id: record.db_id.clone(),
                            source_index: record.source_index,
                        };
                        let messages = render_inference_prompt(
                            &example,
                            description,
                            options.mode,
                            options.self_correction,
                        );
                        let prediction = request_with_retries(
                            &agent,
                            config,
                            token,
                            &messages,
                            PredictionKey {
                                source_index: record.source_index,
                                db_id: record.db_id.clone(),
                            },
                        );
                        if tx.send(prediction).is_err() {
                            break;
                        }
                    }
                });
            }
            drop(tx);

            // Single writer: append each completion to the journal as it
            // arrives.
            for prediction in rx {
                let line = serde_json::to_string(&prediction).expect("prediction serializes");
                {
                    let mut file = journal.lock().expect("journal lock");
                    let _ = writeln!(file, "{line}");
                    let _ = file.flush();
                }
                completed.insert(prediction.key.clone(), prediction);
            }
        });
    }

    // Assemble in dataset order and write the final file.
    let ordered: Vec<Prediction> = items
        .iter()
        .map(|r| {
            completed
                .get(&PredictionKey {
                    source_index: r.source_index,
                    db_id: r.db_id.clone(),
                })
                .expect("every item completed or journaled")
                .clone()
        })
        .collect();
    write_jsonl(out_path, &ordered)?;

    let meta = serde_json::json!({
        "endpoint": config.base_url,
        "model": config.model,
        "temperature": config.temperature,
        "mode": match options.mode { PromptMode::Direct => "direct", PromptMode::Cot => "cot" },
        "self_correction": options.self_correction,
        "max_retries": config.max_retries,
        "timeout_secs": config.timeout_secs,
        "max_concurrent": config.max_concurrent,
        "total_items": items.len(),
    });
    crate::util::write_text(
        &meta_path(out_path),
        &serde_json::to_string_pretty(&meta).expect("meta serializes"),
    )?;

    Ok(ordered)
}

fn request_with_retries(
    agent: &ureq::Agent,
    config: &EndpointConfig,
    token: Option<&str>,
    messages: &[Message],
    key: PredictionKey,
) -> Prediction {
    let url = format!("{}/chat/completions", config.base_url.trim_end_matches('/'));
    let body = serde_json::json!({
        "model": config.model,
        "messages": messages,
        "temperature": config.temperature,
    });

    let mut retries = 0u32;
    let started = Instant::now();
    loop {
        let attempt_started = Instant::now();
        let outcome = send_once(agent, &url, token, &body);
        let latency_ms = attempt_started.elapsed().as_millis() as u64;
        match outcome {
            Ok(content) => {
                return Prediction {
                    key,
                    raw_output: content,
                    latency_ms,
                    retries,
                    error: None,
                }
            }
            Err(failure) => {
                let can_retry = failure.transient && retries < config.max_retries;
                if can_retry {
                    let delay =
                        config.backoff_base_secs * config.backoff_multiplier.powi(retries as i32);
                    std::thread::sleep(Duration::from_secs_f64(delay.max(0.0)));
                    retries += 1;
                    continue;
                }
                return Prediction {
                    key,
                    raw_output: String::new(),
                    latency_ms: started.elapsed().as_millis() as u64,
                    retries,
                    error: Some(failure.message),
                };
            }
        }
    }
}

struct RequestFailure {
    message: String,
    transient: bool,
}

fn send_once(
    agent: &ureq::Agent,
    url: &str,
    token: Option<&str>,
    body: &serde_json::Value,
) -> Result<String, RequestFailure> {
    let mut request = agent.post(url).set("Content-Type", "application/json");
    if let Some(token) = token {
        request = request.set("Authorization", &format!("Bearer {token}"));
    }
    match request.send_json(body.clone()) {
        Ok(response) => {
            let json: serde_json::Value = response.into_json().map_err(|e| RequestFailure {
                message: format!("malformed response body: {e}"),
                transient: true,
            })?;
            json.get("choices")
                .and_then(|c| c.get(0))
                .and_then(|c| c.get("message"))
                .and_then(|m| m.get("content"))
                .and_then(|c| c.as_str())
                .map(str::to_string)
                .ok_or_else(|| RequestFailure {
                    message: "response missing choices[0].message.content".to_string(),
                    transient: true,
                })
        }
        Err(ureq::Error::Status(code, _)) => Err(RequestFailure {
            message: format!("endpoint returned status {code}"),
            transient: code == 429 || code >= 500,
        }),
        Err(ureq::Error::Transport(t)) => Err(RequestFailure {
            message: format!("transport error: {t}"),
            transient: true,
        }),
    }
}

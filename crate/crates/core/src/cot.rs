//! Chain-of-thought training records: the three-message format used for
//! reasoning-trace fine-tuning, plus structural and execution validation.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{NlSqlExample, SchemaDescription};
use crate::evaluator::{
    compare_results, execute_query, gold_orders_rows, last_sql_fence, EvalSettings, ExecFailure,
};
use crate::sql::{parse_sql, ParseError, ParseOptions};
use crate::util::{read_jsonl, write_jsonl, FileError};

/// System prompt for reasoning-trace generation: demands a step-by-step
/// chain of thought followed by the final query in a fenced code block.
pub const COT_SYSTEM_PROMPT: &str = "You are a powerful text-to-SQL model. Your role is to answer user questions by generating SQL queries against a given database schema. First, provide a step-by-step chain of thought that explains your reasoning, and then provide the final SQL query in a markdown code block.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn new(role: Role, content: impl Into<String>) -> Self {
        Message {
            role,
            content: content.into(),
        }
    }
}

/// A three-message training record: system instruction, schema + question,
/// reasoning + fenced SQL answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CotRecord {
    pub messages: Vec<Message>,
}

#[derive(Debug, Error)]
pub enum CotError {
    #[error("schema description is for db \"{description}\" but example is for db \"{example}\"")]
    SchemaMismatch {
        description: String,
        example: String,
    },
    #[error("example has an empty question")]
    EmptyQuestion,
    #[error("reasoning text is empty")]
    EmptyReasoning,
    #[error("final SQL does not parse: {0}")]
    Sql(#[from] ParseError),
    #[error("database unreadable: {0}")]
    DatabaseUnreadable(String),
    #[error("gold query failed, record is unjudgeable: {0}")]
    GoldExecutionFailed(String),
    #[error(transparent)]
    File(#[from] FileError),
}

/// The user-message layout shared by training records and inference prompts.
pub fn user_content(example: &NlSqlExample, description: &SchemaDescription) -> String {
    format!(
        "DATABASE SCHEMA:\n{}\n\nQuestion: {}",
        description.text, example.question
    )
}

fn check_pairing(example: &NlSqlExample, description: &SchemaDescription) -> Result<(), CotError> {
    if description.db_id != example.db_id {
        return Err(CotError::SchemaMismatch {
            description: description.db_id.clone(),
            example: example.db_id.clone(),
        });
    }
    if example.question.trim().is_empty() {
        return Err(CotError::EmptyQuestion);
    }
    Ok(())
}

/// Build the system + user messages sent to a teacher model to elicit a
/// reasoning trace for one example.
pub fn build_teacher_prompt(
    example: &NlSqlExample,
    description: &SchemaDescription,
) -> Result<Vec<Message>, CotError> {
    check_pairing(example, description)?;
    Ok(vec![
        Message::new(Role::System, COT_SYSTEM_PROMPT),
        Message::new(Role::User, user_content(example, description)),
    ])
}

/// Assemble a complete training record from reasoning text and a final
/// query. The final SQL must parse; the assistant message is the reasoning
/// followed by a fenced ```sql block.
pub fn assemble_cot_record(
    example: &NlSqlExample,
    description: &SchemaDescription,
    reasoning: &str,
    final_sql: &str,
) -> Result<CotRecord, CotError> {
    check_pairing(example, description)?;
    if reasoning.trim().is_empty() {
        return Err(CotError::EmptyReasoning);
    }
    parse_sql(final_sql, &ParseOptions::default())?;

    let assistant = format!("{reasoning}\n\n```sql\n{final_sql}\n```");
    Ok(CotRecord {
        messages: vec![
            Message::new(Role::System, COT_SYSTEM_PROMPT),
            Message::new(Role::User, user_content(example, description)),
            Message::new(Role::Assistant, assistant),
        ],
    })
}

/// The reasoning steps a trace is expected to walk through.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepLabel {
    QueryAnalysis,
    TableSelection,
    ColumnSelection,
    LogicStrategy,
    SelfValidation,
}

impl StepLabel {
    pub const ALL: [StepLabel; 5] = [
        StepLabel::QueryAnalysis,
        StepLabel::TableSelection,
        StepLabel::ColumnSelection,
        StepLabel::LogicStrategy,
        StepLabel::SelfValidation,
    ];

    fn patterns(self) -> &'static [&'static str] {
        match self {
            StepLabel::QueryAnalysis => &["query analysis"],
            StepLabel::TableSelection => &["table selection"],
            StepLabel::ColumnSelection => &["column selection"],
            StepLabel::LogicStrategy => {
                &["logic & join strategy", "logic strategy", "join strategy"]
            }
            StepLabel::SelfValidation => &["self-validation", "self validation"],
        }
    }
}

/// Which step labels appear in reasoning text (case-insensitive keyword
/// match). Informational: traces phrased differently still validate.
pub fn detect_steps(text: &str) -> Vec<StepLabel> {
    let lower = text.to_lowercase();
    StepLabel::ALL
        .iter()
        .copied()
        .filter(|label| label.patterns().iter().any(|p| lower.contains(p)))
        .collect()
}

/// Structural reasons a record fails validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CotFailure {
    RoleSequence,
    MissingSchemaHeader,
    MissingQuestion,
    MissingSqlFence,
    SqlUnparseable,
    PredictionExecutionFailed,
    ResultMismatch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CotValidationResult {
    pub structural_ok: bool,
    pub extracted_sql: Option<String>,
    /// Present only when the record is structurally valid and its SQL
    /// parses.
    pub execution_match: Option<bool>,
    pub step_coverage: Vec<StepLabel>,
    pub failure_reason: Option<CotFailure>,
    /// Both queries returned zero rows: a match, but a low-signal one.
    pub empty_result_match: bool,
}

/// Validate a record structurally, then check that its final SQL and the
/// gold SQL produce the same result on the database file.
pub fn validate_cot_record(
    record: &CotRecord,
    gold: &NlSqlExample,
    db_file: &Path,
    settings: &EvalSettings,
) -> Result<CotValidationResult, CotError> {
    let step_coverage = record
        .messages
        .iter()
        .find(|m| m.role == Role::Assistant)
        .map(|m| detect_steps(&m.content))
        .unwrap_or_default();

    let fail = |reason: CotFailure| CotValidationResult {
        structural_ok: false,
        extracted_sql: None,
        execution_match: None,
        step_coverage: step_coverage.clone(),
        failure_reason: Some(reason),
        empty_result_match: false,
    };

    let roles: Vec<Role> = record.messages.iter().map(|m| m.role).collect();
    if roles != [Role::System, Role::User, Role::Assistant] {
        return Ok(fail(CotFailure::RoleSequence));
    }
    let user = &record.messages[1].content;
    if !user.contains("DATABASE SCHEMA:") {
        return Ok(fail(CotFailure::MissingSchemaHeader));
    }
    if !user.contains("Question:") {
        return Ok(fail(CotFailure::MissingQuestion));
    }
    let assistant = &record.messages[2].content;
    let Some(extracted) = last_sql_fence(assistant).filter(|s| !s.is_empty()) else {
        return Ok(fail(CotFailure::MissingSqlFence));
    };

    if parse_sql(&extracted, &ParseOptions::default()).is_err() {
        return Ok(CotValidationResult {
            structural_ok: true,
            extracted_sql: Some(extracted),
            execution_match: None,
            step_coverage,
            failure_reason: Some(CotFailure::SqlUnparseable),
            empty_result_match: false,
        });
    }

    let timeout = std::time::Duration::from_secs_f64(settings.timeout_secs);
    let gold_table = match execute_query(db_file, &gold.gold_sql, timeout) {
        Ok(table) => table,
        Err(ExecFailure::DatabaseUnreadable(msg)) => return Err(CotError::DatabaseUnreadable(msg)),
        Err(e) => return Err(CotError::GoldExecutionFailed(e.to_string())),
    };
    let pred_table = match execute_query(db_file, &extracted, timeout) {
        Ok(table) => table,
        Err(ExecFailure::DatabaseUnreadable(msg)) => return Err(CotError::DatabaseUnreadable(msg)),
        Err(_) => {
            return Ok(CotValidationResult {
                structural_ok: true,
                extracted_sql: Some(extracted),
                execution_match: Some(false),
                step_coverage,
                failure_reason: Some(CotFailure::PredictionExecutionFailed),
                empty_result_match: false,
            })
        }
    };

    let ordered = gold_orders_rows(&gold.gold_sql);
    let matched = compare_results(&gold_table, &pred_table, ordered, &settings.compare);
    Ok(CotValidationResult {
        structural_ok: true,
        extracted_sql: Some(extracted),
        execution_match: Some(matched),
        step_coverage,
        failure_reason: (!matched).then_some(CotFailure::ResultMismatch),
        empty_result_match: matched && gold_table.rows.is_empty() && pred_table.rows.is_empty(),
    })
}

/// Split raw teacher output into (reasoning, final SQL) at the last
/// ```sql fence. Returns None when no sql fence is present.
pub fn split_teacher_output(raw: &str) -> Option<(String, String)> {
    let sql = last_sql_fence(raw)?;
    if sql.is_empty() {
        return None;
    }
    let fence_start = raw.rfind("```sql").or_else(|| raw.rfind("```SQL"))?;
    let reasoning = raw[..fence_start].trim_end().to_string();
    if reasoning.is_empty() {
        return None;
    }
    Some((reasoning, sql))
}

/// Write records as line-delimited JSON in the messages envelope.
pub fn export_records(records: &[CotRecord], path: &Path) -> Result<(), CotError> {
    write_jsonl(path, records)?;
    Ok(())
}

/// Read records back; every line must be a full messages envelope.
pub fn import_records(path: &Path) -> Result<Vec<CotRecord>, CotError> {
    Ok(read_jsonl(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::SchemaDescription;

    fn example() -> NlSqlExample {
        NlSqlExample {
            question: "How many accounts are there?".into(),
            gold_sql: "SELECT count(*) FROM Accounts".into(),
            db_id: "mini".into(),
            source_index: 0,
        }
    }

    fn description() -> SchemaDescription {
        SchemaDescription {
            db_id: "mini".into(),
            text: "Table: Accounts\naccount_id INTEGER PRIMARY KEY".into(),
            included_samples: false,
            sample_count: 0,
            warnings: Vec::new(),
        }
    }

    #[test]
    fn teacher_prompt_layout() {
        let messages = build_teacher_prompt(&example(), &description()).unwrap();
        assert_eq!(messages.len(), 2);
        assert_eq!(messages[0].role, Role::System);
        assert_eq!(messages[0].content, COT_SYSTEM_PROMPT);
        assert!(messages[1]
            .content
            .starts_with("DATABASE SCHEMA:\nTable: Accounts"));
        assert!(messages[1]
            .content
            .ends_with("\n\nQuestion: How many accounts are there?"));
    }

    #[test]
    fn teacher_prompt_carries_sample_lines_when_description_has_them() {
        let desc = SchemaDescription {
            db_id: "mini".into(),
            text: "Table: Accounts\naccount_id INTEGER PRIMARY KEY\n-- samples: 1, 2".into(),
            included_samples: true,
            sample_count: 2,
            warnings: Vec::new(),
        };
        let messages = build_teacher_prompt(&example(), &desc).unwrap();
        assert!(messages[1].content.contains("-- samples: 1, 2"));
    }

    #[test]
    fn teacher_prompt_rejects_mismatched_schema() {
        let mut desc = description();
        desc.db_id = "other".into();
        let err = build_teacher_prompt(&example(), &desc).unwrap_err();
        assert!(matches!(err, CotError::SchemaMismatch { .. }));
    }

    #[test]
    fn teacher_prompt_rejects_empty_question() {
        let mut ex = example();
        ex.question = "  ".into();
        let err = build_teacher_prompt(&ex, &description()).unwrap_err();
        assert!(matches!(err, CotError::EmptyQuestion));
    }

    #[test]
    fn assemble_minimal_record() {
        let record = assemble_cot_record(&example(), &description(), "x", "SELECT 1").unwrap();
        assert_eq!(record.messages.len(), 3);
        assert_eq!(record.messages[2].content, "x\n\n```sql\nSELECT 1\n```");
    }

    #[test]
    fn assemble_rejects_bad_sql() {
        let err =
            assemble_cot_record(&example(), &description(), "reasoning", "SELEC").unwrap_err();
        assert!(matches!(err, CotError::Sql(_)));
    }

    #[test]
    fn assemble_rejects_empty_reasoning() {
        let err = assemble_cot_record(&example(), &description(), " ", "SELECT 1").unwrap_err();
        assert!(matches!(err, CotError::EmptyReasoning));
    }

    #[test]
    fn step_detection() {
        let text = "1. Query Analysis: ...\n2. Table Selection: ...\n5. Self-Validation: done";
        let steps = detect_steps(text);
        assert_eq!(
            steps,
            vec![
                StepLabel::QueryAnalysis,
                StepLabel::TableSelection,
                StepLabel::SelfValidation
            ]
        );
        assert_eq!(detect_steps("no labels here"), Vec::<StepLabel>::new());
    }

    #[test]
    fn validation_flags_missing_fence() {
        let mut record =
            assemble_cot_record(&example(), &description(), "reason", "SELECT 1").unwrap();
        record.messages[2].content = "no fence at all".into();

        let dir = tempfile::tempdir().unwrap();
        let db = dir.path().join("mini.sqlite");
        rusqlite::Connection::open(&db)
            .unwrap()
            .execute_batch("CREATE TABLE Accounts (account_id INTEGER PRIMARY KEY);")
            .unwrap();

        let result =
            validate_cot_record(&record, &example(), &db, &EvalSettings::default()).unwrap();
        assert!(!result.structural_ok);
        assert_eq!(result.failure_reason, Some(CotFailure::MissingSqlFence));
        assert_eq!(result.execution_match, None);
    }

    #[test]
    fn validation_executes_and_matches() {
        let dir = tempfile::tempdir().unwrap();
        let db = dir.path().join("mini.sqlite");
        rusqlite::Connection::open(&db)
            .unwrap()
            .execute_batch(
                "CREATE TABLE Accounts (account_id INTEGER PRIMARY KEY, name TEXT);
                 INSERT INTO Accounts VALUES (1, 'a'), (2, 'b');",
            )
            .unwrap();

        let record = assemble_cot_record(
            &example(),
            &description(),
            "count rows",
            "SELECT count(*) FROM Accounts",
        )
        .unwrap();
        let result =
            validate_cot_record(&record, &example(), &db, &EvalSettings::default()).unwrap();
        assert!(result.structural_ok);
        assert_eq!(result.execution_match, Some(true));
        assert!(!result.empty_result_match);

        // A record whose SQL selects the wrong thing mismatches.
        let wrong = assemble_cot_record(
            &example(),
            &description(),
            "grab names",
            "SELECT name FROM Accounts",
        )
        .unwrap();
        let result =
            validate_cot_record(&wrong, &example(), &db, &EvalSettings::default()).unwrap();
        assert_eq!(result.execution_match, Some(false));
        assert_eq!(result.failure_reason, Some(CotFailure::ResultMismatch));
    }

    #[test]
    fn validation_flags_gold_failure() {
        let dir = tempfile::tempdir().unwrap();
        let db = dir.path().join("mini.sqlite");
        rusqlite::Connection::open(&db)
            .unwrap()
            .execute_batch("CREATE TABLE Other (x INTEGER);")
            .unwrap();
        let record = assemble_cot_record(&example(), &description(), "reason", "SELECT 1").unwrap();
        let err =
            validate_cot_record(&record, &example(), &db, &EvalSettings::default()).unwrap_err();
        assert!(matches!(err, CotError::GoldExecutionFailed(_)));
    }

    #[test]
    fn teacher_output_splits_at_last_fence() {
        let raw = "First I look at the schema.\n\n```sql\nSELECT 1\n```";
        let (reasoning, sql) = split_teacher_output(raw).unwrap();
        assert_eq!(reasoning, "First I look at the schema.");
        assert_eq!(sql, "SELECT 1");

        assert!(split_teacher_output("no fence here").is_none());
        assert!(split_teacher_output("```sql\nSELECT 1\n```").is_none());
    }

    #[test]
    fn export_import_identity() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("records.jsonl");
        let records = vec![
            assemble_cot_record(&example(), &description(), "r1", "SELECT 1").unwrap(),
            assemble_cot_record(&example(), &description(), "r2", "SELECT 2").unwrap(),
        ];
        export_records(&records, &path).unwrap();
        let back = import_records(&path).unwrap();
        assert_eq!(back, records);
    }

    #[test]
    fn export_empty_is_empty_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("records.jsonl");
        export_records(&[], &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "");
        assert!(import_records(&path).unwrap().is_empty());
    }
}

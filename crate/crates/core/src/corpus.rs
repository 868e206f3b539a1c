//! Corpus ingestion: example files, schema catalogs, and schema-description
//! rendering.
//!
//! The on-disk layout follows the cross-domain text-to-SQL convention:
//! an examples file (JSON array of question/query/db_id objects), a tables
//! catalog (JSON array of per-database schema entries), and one SQLite file
//! per database at `<root>/database/<db_id>/<db_id>.sqlite`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rusqlite::types::ValueRef;
use rusqlite::{Connection, OpenFlags};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("format error{}: {message}", entry.map(|i| format!(" at entry {i}")).unwrap_or_default())]
    Format {
        entry: Option<usize>,
        message: String,
    },
    #[error("entry {entry}: missing field \"{field}\"")]
    MissingField { entry: usize, field: String },
    #[error("duplicate db_id \"{0}\" in tables catalog")]
    DuplicateDbId(String),
    #[error("database file unreadable at {path}: {message}")]
    DatabaseUnreadable { path: String, message: String },
    #[error("sample values requested but no database file was provided")]
    SamplesRequireDatabase,
}

fn io_err(path: &Path, source: std::io::Error) -> CorpusError {
    CorpusError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// One (question, gold SQL, database) triple from the source corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NlSqlExample {
    pub question: String,
    pub gold_sql: String,
    pub db_id: String,
    /// Position in the source examples file.
    pub source_index: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    /// Declared type, verbatim from the catalog (refined from the database
    /// file when one is supplied to [`describe_schema`]).
    pub declared_type: String,
    pub is_primary_key: bool,
    pub is_not_null: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<Column>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForeignKey {
    pub child_table: String,
    pub child_column: String,
    pub parent_table: String,
    pub parent_column: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DbSchema {
    pub db_id: String,
    pub tables: Vec<Table>,
    pub foreign_keys: Vec<ForeignKey>,
    /// Non-fatal catalog issues (dangling foreign keys and the like).
    pub warnings: Vec<String>,
}

impl DbSchema {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables
            .iter()
            .find(|t| t.name.eq_ignore_ascii_case(name))
    }
}

/// Load an examples file: a JSON array of objects with `question`, `query`
/// and `db_id` fields. Extra fields are ignored.
pub fn load_examples(path: &Path) -> Result<Vec<NlSqlExample>, CorpusError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let values: Vec<serde_json::Value> =
        serde_json::from_str(&text).map_err(|e| CorpusError::Format {
            entry: None,
            message: format!("expected a JSON array of examples: {e}"),
        })?;

    let mut out = Vec::with_capacity(values.len());
    for (i, value) in values.iter().enumerate() {
        let get = |field: &str| -> Result<String, CorpusError> {
            let v = value.get(field).ok_or_else(|| CorpusError::MissingField {
                entry: i,
                field: field.to_string(),
            })?;
            v.as_str()
                .map(str::to_string)
                .ok_or_else(|| CorpusError::Format {
                    entry: Some(i),
                    message: format!("field \"{field}\" is not a string"),
                })
        };
        let question = get("question")?;
        let gold_sql = get("query")?;
        let db_id = get("db_id")?;
        if gold_sql.trim().is_empty() {
            return Err(CorpusError::Format {
                entry: Some(i),
                message: "field \"query\" is empty".to_string(),
            });
        }
        out.push(NlSqlExample {
            question,
            gold_sql,
            db_id,
            source_index: i as u64,
        });
    }
    Ok(out)
}

/// Load a tables catalog: a JSON array of per-database entries carrying
/// `db_id`, `table_names_original`, `column_names_original`, `column_types`,
/// `primary_keys` and `foreign_keys` (column-index pairs).
pub fn load_schemas(path: &Path) -> Result<BTreeMap<String, DbSchema>, CorpusError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let values: Vec<serde_json::Value> =
        serde_json::from_str(&text).map_err(|e| CorpusError::Format {
            entry: None,
            message: format!("expected a JSON array of schema entries: {e}"),
        })?;

    let mut out = BTreeMap::new();
    for (i, value) in values.iter().enumerate() {
        let schema = parse_schema_entry(value, i)?;
        if out.contains_key(&schema.db_id) {
            return Err(CorpusError::DuplicateDbId(schema.db_id));
        }
        out.insert(schema.db_id.clone(), schema);
    }
    Ok(out)
}

fn parse_schema_entry(value: &serde_json::Value, entry: usize) -> Result<DbSchema, CorpusError> {
    let fmt = |message: String| CorpusError::Format {
        entry: Some(entry),
        message,
    };

    let db_id = value
        .get("db_id")
        .and_then(|v| v.as_str())
        .ok_or_else(|| CorpusError::MissingField {
            entry,
            field: "db_id".to_string(),
        })?
        .to_string();

    let table_names: Vec<String> = value
        .get("table_names_original")
        .and_then(|v| v.as_array())
        .ok_or_else(|| CorpusError::MissingField {
            entry,
            field: "table_names_original".to_string(),
        })?
        .iter()
        .map(|v| {
            v.as_str()
                .map(str::to_string)
                .ok_or_else(|| fmt("table name is not a string".to_string()))
        })
        .collect::<Result<_, _>>()?;

    let column_entries: &Vec<serde_json::Value> = value
        .get("column_names_original")
        .and_then(|v| v.as_array())
        .ok_or_else(|| CorpusError::MissingField {
            entry,
            field: "column_names_original".to_string(),
        })?;

    let column_types: Vec<String> = value
        .get("column_types")
        .and_then(|v| v.as_array())
        .map(|a| {
            a.iter()
                .map(|v| v.as_str().unwrap_or("").to_string())
                .collect()
        })
        .unwrap_or_default();

    // (table index, column name) per catalog column, skipping the leading
    // wildcard entry ([-1, "*"]).
    let mut catalog_columns: Vec<(i64, String)> = Vec::with_capacity(column_entries.len());
    for col in column_entries {
        let pair = col
            .as_array()
            .filter(|a| a.len() == 2)
            .ok_or_else(|| fmt("column entry is not a [table_index, name] pair".to_string()))?;
        let t_idx = pair[0]
            .as_i64()
            .ok_or_else(|| fmt("column table index is not an integer".to_string()))?;
        let name = pair[1]
            .as_str()
            .ok_or_else(|| fmt("column name is not a string".to_string()))?;
        catalog_columns.push((t_idx, name.to_string()));
    }

    let primary_keys: Vec<usize> = value
        .get("primary_keys")
        .and_then(|v| v.as_array())
        .map(|a| {
            a.iter()
                .flat_map(|v| {
                    // Composite keys are sometimes nested arrays; flatten.
                    match v {
                        serde_json::Value::Array(inner) => {
                            inner.iter().filter_map(|x| x.as_u64()).collect::<Vec<_>>()
                        }
                        other => other.as_u64().into_iter().collect(),
                    }
                })
                .map(|x| x as usize)
                .collect()
        })
        .unwrap_or_default();

    let mut warnings = Vec::new();
    let mut tables: Vec<Table> = table_names
        .iter()
        .map(|name| Table {
            name: clean_name(name),
            columns: Vec::new(),
        })
        .collect();

    for (col_idx, (t_idx, name)) in catalog_columns.iter().enumerate() {
        if *t_idx < 0 {
            continue; // the wildcard pseudo-column
        }
        let Some(table) = tables.get_mut(*t_idx as usize) else {
            return Err(fmt(format!(
                "column \"{name}\" references nonexistent table index {t_idx}"
            )));
        };
        table.columns.push(Column {
            name: clean_name(name),
            declared_type: column_types.get(col_idx).cloned().unwrap_or_default(),
            is_primary_key: primary_keys.contains(&col_idx),
            is_not_null: false,
        });
    }

    // Uniqueness (case-insensitive) of table names and of column names
    // within each table.
    let mut seen_tables = std::collections::HashSet::new();
    for table in &tables {
        if !seen_tables.insert(table.name.to_ascii_lowercase()) {
            return Err(fmt(format!("duplicate table name \"{}\"", table.name)));
        }
        let mut seen_cols = std::collections::HashSet::new();
        for col in &table.columns {
            if !seen_cols.insert(col.name.to_ascii_lowercase()) {
                return Err(fmt(format!(
                    "duplicate column name \"{}\" in table \"{}\"",
                    col.name, table.name
                )));
            }
        }
    }

    // Resolve FK column-index pairs to names. Dangling references are
    // recorded, not fatal.
    let mut foreign_keys = Vec::new();
    if let Some(fks) = value.get("foreign_keys").and_then(|v| v.as_array()) {
        for fk in fks {
            let pair = fk
                .as_array()
                .filter(|a| a.len() == 2)
                .and_then(|a| Some((a[0].as_u64()?, a[1].as_u64()?)));
            let Some((child_idx, parent_idx)) = pair else {
                warnings.push("foreign key entry is not an index pair".to_string());
                continue;
            };
            let resolve = |idx: u64| -> Option<(String, String)> {
                let (t_idx, name) = catalog_columns.get(idx as usize)?;
                if *t_idx < 0 {
                    return None;
                }
                let table = tables.get(*t_idx as usize)?;
                Some((table.name.clone(), clean_name(name)))
            };
            match (resolve(child_idx), resolve(parent_idx)) {
                (Some((child_table, child_column)), Some((parent_table, parent_column))) => {
                    foreign_keys.push(ForeignKey {
                        child_table,
                        child_column,
                        parent_table,
                        parent_column,
                    });
                }
                _ => warnings.push(format!(
                    "dangling foreign key: column indices ({child_idx}, {parent_idx})"
                )),
            }
        }
    }

    Ok(DbSchema {
        db_id,
        tables,
        foreign_keys,
        warnings,
    })
}

fn clean_name(name: &str) -> String {
    name.trim().to_string()
}

/// Path of a database file under the corpus root.
pub fn db_file_path(root: &Path, db_id: &str) -> PathBuf {
    root.join("database")
        .join(db_id)
        .join(format!("{db_id}.sqlite"))
}

/// Options for [`describe_schema`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DescribeOptions {
    pub include_samples: bool,
    pub sample_count: usize,
}

impl Default for DescribeOptions {
    fn default() -> Self {
        DescribeOptions {
            include_samples: false,
            sample_count: 3,
        }
    }
}

/// A rendered schema description.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaDescription {
    pub db_id: String,
    pub text: String,
    pub included_samples: bool,
    pub sample_count: usize,
    /// Tables listed in the catalog but absent from the database file.
    pub warnings: Vec<String>,
}

/// Render a schema as one block per table: a `Table: <name>` line, then one
/// line per column with its declared type and constraints, in declaration
/// order. With samples enabled, each column line is followed by a
/// `-- samples: v1, v2` line holding the first distinct non-null values in
/// storage order.
///
/// When a database file is given, declared types and NOT NULL / PRIMARY KEY
/// flags are refined from the live table definitions, which carry the full
/// type spellings the catalog may abbreviate.
pub fn describe_schema(
    schema: &DbSchema,
    options: &DescribeOptions,
    db_file: Option<&Path>,
) -> Result<SchemaDescription, CorpusError> {
    if options.include_samples && db_file.is_none() {
        return Err(CorpusError::SamplesRequireDatabase);
    }

    let conn = match db_file {
        Some(path) => Some(open_read_only(path)?),
        None => None,
    };

    let mut warnings = Vec::new();
    let mut blocks = Vec::with_capacity(schema.tables.len());
    for table in &schema.tables {
        let live = match &conn {
            Some(conn) => {
                let info =
                    table_info(conn, &table.name).map_err(|e| CorpusError::DatabaseUnreadable {
                        path: db_file.unwrap().display().to_string(),
                        message: e.to_string(),
                    })?;
                if info.is_empty() {
                    warnings.push(format!("table \"{}\" missing in database file", table.name));
                    None
                } else {
                    Some(info)
                }
            }
            None => None,
        };

        let mut lines = vec![format!("Table: {}", table.name)];
        for col in &table.columns {
            let refined = live
                .as_ref()
                .and_then(|info| info.iter().find(|c| c.name.eq_ignore_ascii_case(&col.name)));
            let (ty, pk, not_null) = match refined {
                Some(c) => (c.declared_type.clone(), c.is_primary_key, c.is_not_null),
                None => (
                    col.declared_type.clone(),
                    col.is_primary_key,
                    col.is_not_null,
                ),
            };
            let mut line = col.name.clone();
            if !ty.is_empty() {
                line.push(' ');
                line.push_str(&ty);
            }
            if pk {
                line.push_str(" PRIMARY KEY");
            }
            if not_null {
                line.push_str(" NOT NULL");
            }
            lines.push(line);

            if options.include_samples && live.is_some() {
                let values = sample_values(
                    conn.as_ref().unwrap(),
                    &table.name,
                    &col.name,
                    options.sample_count,
                )
                .map_err(|e| CorpusError::DatabaseUnreadable {
                    path: db_file.unwrap().display().to_string(),
                    message: e.to_string(),
                })?;
                if !values.is_empty() {
                    lines.push(format!("-- samples: {}", values.join(", ")));
                }
            }
        }
        blocks.push(lines.join("\n"));
    }

    Ok(SchemaDescription {
        db_id: schema.db_id.clone(),
        text: blocks.join("\n\n"),
        included_samples: options.include_samples,
        sample_count: options.sample_count,
        warnings,
    })
}

pub(crate) fn open_read_only(path: &Path) -> Result<Connection, CorpusError> {
    Connection::open_with_flags(
        path,
        OpenFlags::SQLITE_OPEN_READ_ONLY | OpenFlags::SQLITE_OPEN_NO_MUTEX,
    )
    .map_err(|e| CorpusError::DatabaseUnreadable {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

struct LiveColumn {
    name: String,
    declared_type: String,
    is_primary_key: bool,
    is_not_null: bool,
}

fn quote_ident(name: &str) -> String {
    format!("\"{}\"", name.replace('"', "\"\""))
}

fn table_info(conn: &Connection, table: &str) -> rusqlite::Result<Vec<LiveColumn>> {
    let sql = format!("PRAGMA table_info({})", quote_ident(table));
    let mut stmt = conn.prepare(&sql)?;
    let rows = stmt.query_map([], |row| {
        Ok(LiveColumn {
            name: row.get::<_, String>("name")?,
            declared_type: row.get::<_, String>("type")?,
            is_primary_key: row.get::<_, i64>("pk")? > 0,
            is_not_null: row.get::<_, i64>("notnull")? != 0,
        })
    })?;
    rows.collect()
}

/// First `limit` distinct non-null values of a column, in storage order.
fn sample_values(
    conn: &Connection,
    table: &str,
    column: &str,
    limit: usize,
) -> rusqlite::Result<Vec<String>> {
    let sql = format!(
        "SELECT {col} FROM {table} WHERE {col} IS NOT NULL",
        col = quote_ident(column),
        table = quote_ident(table)
    );
    let mut stmt = conn.prepare(&sql)?;
    let mut rows = stmt.query([])?;
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    while let Some(row) = rows.next()? {
        let rendered = render_value(row.get_ref(0)?);
        if seen.insert(rendered.clone()) {
            out.push(rendered);
            if out.len() >= limit {
                break;
            }
        }
    }
    Ok(out)
}

fn render_value(value: ValueRef<'_>) -> String {
    const MAX_LEN: usize = 64;
    let mut s = match value {
        ValueRef::Null => String::new(),
        ValueRef::Integer(i) => i.to_string(),
        ValueRef::Real(f) => format!("{f}"),
        ValueRef::Text(t) => String::from_utf8_lossy(t).into_owned(),
        ValueRef::Blob(b) => {
            let hex: String = b.iter().take(16).map(|x| format!("{x:02x}")).collect();
            format!("0x{hex}")
        }
    };
    // Keep descriptions line-oriented.
    s = s.replace(['\n', '\r', '\t'], " ");
    if s.len() > MAX_LEN {
        let mut cut = MAX_LEN;
        while !s.is_char_boundary(cut) {
            cut -= 1;
        }
        s.truncate(cut);
        s.push('…');
    }
    s
}

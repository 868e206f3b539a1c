//! SQL parsing and clause extraction.
//!
//! Covers the SELECT dialect found in cross-domain text-to-SQL corpora:
//! joins (keyword and comma form), subqueries in FROM / WHERE / HAVING /
//! projection position, set operators, aggregates, GROUP BY / HAVING /
//! ORDER BY / LIMIT. Identifiers are case-insensitive; double-quoted and
//! backtick-quoted identifiers are both accepted.

mod ast;
mod inventory;
mod lexer;
mod parser;
mod serialize;

pub use ast::*;
pub use inventory::{clause_inventory, ClauseInventory};
pub use serialize::to_sql;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: u32,
        column: u32,
        offset: usize,
        message: String,
    },
    #[error("unsupported statement kind: {kind}")]
    UnsupportedStatement { kind: String },
}

/// Knobs for [`parse_sql`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParseOptions {
    /// Maximum select-statement nesting before parsing is aborted.
    pub max_depth: usize,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions { max_depth: 64 }
    }
}

/// Parse a single SELECT statement (optionally semicolon-terminated).
pub fn parse_sql(text: &str, options: &ParseOptions) -> Result<QueryAst, ParseError> {
    parser::parse(text, options)
}

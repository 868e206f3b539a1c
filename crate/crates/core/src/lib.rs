//! Dataset curation and evaluation toolkit for natural-language-to-SQL work.
//!
//! The pipeline stages, each its own module:
//!
//! - [`sql`] — parse SELECT statements and extract clause inventories
//! - [`complexity`] — score queries and assign difficulty buckets
//! - [`corpus`] — load examples / schema catalogs, render schema descriptions
//! - [`curator`] — deterministic stratified sampling and train/val splits
//! - [`cot`] — chain-of-thought training-record assembly and validation
//! - [`gateway`] — batch inference against a chat-completion HTTP endpoint
//! - [`evaluator`] — execution-accuracy evaluation with an error taxonomy
//! - [`report`] — distribution tables, run comparisons, figure series

pub mod complexity;
pub mod corpus;
pub mod cot;
pub mod curator;
pub mod evaluator;
pub mod gateway;
pub mod report;
pub mod sql;
pub mod util;

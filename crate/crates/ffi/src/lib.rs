//! C ABI over the core toolkit: complexity scoring, SQL extraction from
//! model output, and single-pair execution-accuracy checks.
//!
//! Conventions: functions return [`Nl2SqlStatus`]; results come back
//! through out-pointers. Strings returned as `*mut c_char` are owned by the
//! caller and must be released with [`nl2sql_string_free`]. On any
//! non-`Ok` status, [`nl2sql_last_error_message`] yields a human-readable
//! description. Handles are opaque and freed with their matching `_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::time::Duration;

use nl2sql_core::complexity::{
    bucket, score_query, DifficultyBucket, ThresholdsConfig, WeightsConfig,
};
use nl2sql_core::evaluator::{
    compare_results, execute_query, extract_sql, gold_orders_rows, CompareSettings, ExecFailure,
};
use nl2sql_core::sql::{clause_inventory, parse_sql, ParseError, ParseOptions};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Nl2SqlStatus {
    Ok = 0,
    /// A required pointer was null or an argument was out of range.
    InvalidArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// The SQL text does not parse.
    SyntaxError = 3,
    /// The statement parses but is not a SELECT.
    UnsupportedStatement = 4,
    /// The database file could not be opened read-only.
    DatabaseUnreadable = 5,
    InternalError = 6,
}

/// Difficulty bucket of a scored query.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Nl2SqlBucket {
    Easy = 0,
    Medium = 1,
    Hard = 2,
}

impl From<DifficultyBucket> for Nl2SqlBucket {
    fn from(value: DifficultyBucket) -> Self {
        match value {
            DifficultyBucket::Easy => Nl2SqlBucket::Easy,
            DifficultyBucket::Medium => Nl2SqlBucket::Medium,
            DifficultyBucket::Hard => Nl2SqlBucket::Hard,
        }
    }
}

/// Outcome of a single gold-versus-prediction execution check.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Nl2SqlVerdict {
    Correct = 0,
    ResultMismatch = 1,
    ExecutionFailed = 2,
    GoldFailed = 3,
    Timeout = 4,
    ExtractionFailed = 5,
}

/// Opaque scorer: clause weights plus bucket thresholds.
pub struct Nl2SqlScorer {
    weights: WeightsConfig,
    thresholds: ThresholdsConfig,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: impl Into<String>) {
    let owned = CString::new(message.into().replace('\0', " "))
        .unwrap_or_else(|_| CString::new("error message unavailable").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(owned));
}

fn clear_last_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

/// # Safety
/// `ptr` must be non-null and point to a NUL-terminated string.
unsafe fn utf8_arg<'a>(ptr: *const c_char) -> Result<&'a str, Nl2SqlStatus> {
    if ptr.is_null() {
        set_last_error("null pointer argument");
        return Err(Nl2SqlStatus::InvalidArgument);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_last_error("argument is not valid UTF-8");
        Nl2SqlStatus::InvalidUtf8
    })
}

/// Library version as a static string; do not free.
#[no_mangle]
pub extern "C" fn nl2sql_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}

/// The last error message for this thread, or null when the previous call
/// succeeded. The caller owns the returned string.
#[no_mangle]
pub extern "C" fn nl2sql_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|slot| match slot.borrow().as_ref() {
        Some(message) => message.clone().into_raw(),
        None => std::ptr::null_mut(),
    })
}

/// Release a string returned by this library.
///
/// # Safety
/// `s` must have been returned by a function in this library and not freed
/// already. Null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn nl2sql_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// New scorer with default weights (1 point per clause and nesting level)
/// and default thresholds (Easy <= 1 < Medium <= 3 < Hard).
#[no_mangle]
pub extern "C" fn nl2sql_scorer_new() -> *mut Nl2SqlScorer {
    clear_last_error();
    Box::into_raw(Box::new(Nl2SqlScorer {
        weights: WeightsConfig::default(),
        thresholds: ThresholdsConfig::default(),
    }))
}

/// New scorer with explicit weights and thresholds. Returns null (with a
/// last-error message) when a weight is negative or thresholds are not
/// ordered.
#[no_mangle]
pub extern "C" fn nl2sql_scorer_new_with(
    w_join: f64,
    w_group_by: f64,
    w_order_by: f64,
    w_having: f64,
    w_nesting: f64,
    easy_max: f64,
    medium_max: f64,
) -> *mut Nl2SqlScorer {
    clear_last_error();
    let weights = WeightsConfig {
        w_join,
        w_group_by,
        w_order_by,
        w_having,
        w_nesting,
    };
    let thresholds = ThresholdsConfig {
        easy_max,
        medium_max,
    };
    if let Err(e) = weights.validate() {
        set_last_error(e.to_string());
        return std::ptr::null_mut();
    }
    if let Err(e) = thresholds.validate() {
        set_last_error(e.to_string());
        return std::ptr::null_mut();
    }
    Box::into_raw(Box::new(Nl2SqlScorer {
        weights,
        thresholds,
    }))
}

/// Release a scorer.
///
/// # Safety
/// `scorer` must come from `nl2sql_scorer_new*` and not be freed twice.
/// Null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn nl2sql_scorer_free(scorer: *mut Nl2SqlScorer) {
    if !scorer.is_null() {
        drop(Box::from_raw(scorer));
    }
}

/// Score one SQL query and assign its difficulty bucket.
///
/// # Safety
/// `scorer` must be a live scorer handle; `sql` must be a NUL-terminated
/// string; `out_score` and `out_bucket` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nl2sql_score_sql(
    scorer: *const Nl2SqlScorer,
    sql: *const c_char,
    out_score: *mut f64,
    out_bucket: *mut Nl2SqlBucket,
) -> Nl2SqlStatus {
    clear_last_error();
    if scorer.is_null() || out_score.is_null() || out_bucket.is_null() {
        set_last_error("null pointer argument");
        return Nl2SqlStatus::InvalidArgument;
    }
    let sql = match utf8_arg(sql) {
        Ok(s) => s,
        Err(status) => return status,
    };
    let scorer = &*scorer;
    match parse_sql(sql, &ParseOptions::default()) {
        Ok(ast) => {
            let score = score_query(&clause_inventory(&ast), &scorer.weights);
            *out_score = score;
            *out_bucket = bucket(score, &scorer.thresholds).into();
            Nl2SqlStatus::Ok
        }
        Err(e @ ParseError::Syntax { .. }) => {
            set_last_error(e.to_string());
            Nl2SqlStatus::SyntaxError
        }
        Err(e @ ParseError::UnsupportedStatement { .. }) => {
            set_last_error(e.to_string());
            Nl2SqlStatus::UnsupportedStatement
        }
    }
}

/// Extract the final SQL from raw model output (last ```sql fence, last
/// fence of any kind, or the trimmed text). Returns null when nothing
/// usable remains; free the result with [`nl2sql_string_free`].
///
/// # Safety
/// `raw_output` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn nl2sql_extract_sql(raw_output: *const c_char) -> *mut c_char {
    clear_last_error();
    let raw = match utf8_arg(raw_output) {
        Ok(s) => s,
        Err(_) => return std::ptr::null_mut(),
    };
    let extracted = extract_sql(raw);
    if extracted.is_empty() {
        set_last_error("no SQL found in output");
        return std::ptr::null_mut();
    }
    match CString::new(extracted.replace('\0', " ")) {
        Ok(s) => s.into_raw(),
        Err(_) => {
            set_last_error("extracted SQL could not be converted");
            std::ptr::null_mut()
        }
    }
}

/// Execute gold and predicted SQL read-only against a database file and
/// compare result sets (multiset rows unless the gold query has ORDER BY,
/// numeric cells within 1e-6 relative tolerance). The comparison outcome
/// lands in `out_verdict`; the status reports only environmental failures.
///
/// # Safety
/// All pointer arguments must be valid; strings NUL-terminated;
/// `out_verdict` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nl2sql_execution_match(
    db_path: *const c_char,
    gold_sql: *const c_char,
    predicted_sql: *const c_char,
    timeout_secs: f64,
    out_verdict: *mut Nl2SqlVerdict,
) -> Nl2SqlStatus {
    clear_last_error();
    if out_verdict.is_null() {
        set_last_error("null pointer argument");
        return Nl2SqlStatus::InvalidArgument;
    }
    let (db_path, gold, predicted) = match (
        utf8_arg(db_path),
        utf8_arg(gold_sql),
        utf8_arg(predicted_sql),
    ) {
        (Ok(a), Ok(b), Ok(c)) => (a, b, c),
        (Err(s), _, _) | (_, Err(s), _) | (_, _, Err(s)) => return s,
    };
    if !timeout_secs.is_finite() || timeout_secs <= 0.0 {
        set_last_error("timeout must be positive");
        return Nl2SqlStatus::InvalidArgument;
    }

    if predicted.trim().is_empty() {
        *out_verdict = Nl2SqlVerdict::ExtractionFailed;
        return Nl2SqlStatus::Ok;
    }

    let timeout = Duration::from_secs_f64(timeout_secs);
    let db_file = Path::new(db_path);

    let gold_table = match execute_query(db_file, gold, timeout) {
        Ok(table) => table,
        Err(ExecFailure::DatabaseUnreadable(message)) => {
            set_last_error(message);
            return Nl2SqlStatus::DatabaseUnreadable;
        }
        Err(e) => {
            set_last_error(e.to_string());
            *out_verdict = Nl2SqlVerdict::GoldFailed;
            return Nl2SqlStatus::Ok;
        }
    };
    let pred_table = match execute_query(db_file, predicted, timeout) {
        Ok(table) => table,
        Err(ExecFailure::DatabaseUnreadable(message)) => {
            set_last_error(message);
            return Nl2SqlStatus::DatabaseUnreadable;
        }
        Err(ExecFailure::Timeout) => {
            *out_verdict = Nl2SqlVerdict::Timeout;
            return Nl2SqlStatus::Ok;
        }
        Err(e) => {
            set_last_error(e.to_string());
            *out_verdict = Nl2SqlVerdict::ExecutionFailed;
            return Nl2SqlStatus::Ok;
        }
    };

    let matched = compare_results(
        &gold_table,
        &pred_table,
        gold_orders_rows(gold),
        &CompareSettings::default(),
    );
    *out_verdict = if matched {
        Nl2SqlVerdict::Correct
    } else {
        Nl2SqlVerdict::ResultMismatch
    };
    Nl2SqlStatus::Ok
}

#ifndef NL2SQL_H
#define NL2SQL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Difficulty bucket of a scored query.
 */
typedef enum {
  NL2_SQL_BUCKET_EASY = 0,
  NL2_SQL_BUCKET_MEDIUM = 1,
  NL2_SQL_BUCKET_HARD = 2,
} Nl2SqlBucket;

/**
 * Status codes returned by every fallible function.
 */
typedef enum {
  NL2_SQL_STATUS_OK = 0,
  /**
   * A required pointer was null or an argument was out of range.
   */
  NL2_SQL_STATUS_INVALID_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  NL2_SQL_STATUS_INVALID_UTF8 = 2,
  /**
   * The SQL text does not parse.
   */
  NL2_SQL_STATUS_SYNTAX_ERROR = 3,
  /**
   * The statement parses but is not a SELECT.
   */
  NL2_SQL_STATUS_UNSUPPORTED_STATEMENT = 4,
  /**
   * The database file could not be opened read-only.
   */
  NL2_SQL_STATUS_DATABASE_UNREADABLE = 5,
  NL2_SQL_STATUS_INTERNAL_ERROR = 6,
} Nl2SqlStatus;

/**
 * Outcome of a single gold-versus-prediction execution check.
 */
typedef enum {
  NL2_SQL_VERDICT_CORRECT = 0,
  NL2_SQL_VERDICT_RESULT_MISMATCH = 1,
  NL2_SQL_VERDICT_EXECUTION_FAILED = 2,
  NL2_SQL_VERDICT_GOLD_FAILED = 3,
  NL2_SQL_VERDICT_TIMEOUT = 4,
  NL2_SQL_VERDICT_EXTRACTION_FAILED = 5,
} Nl2SqlVerdict;

/**
 * Opaque scorer: clause weights plus bucket thresholds.
 */
typedef struct Nl2SqlScorer Nl2SqlScorer;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static string; do not free.
 */
const char *nl2sql_version(void);

/**
 * The last error message for this thread, or null when the previous call
 * succeeded. The caller owns the returned string.
 */
char *nl2sql_last_error_message(void);

/**
 * Release a string returned by this library.
 *
 * # Safety
 * `s` must have been returned by a function in this library and not freed
 * already. Null is a no-op.
 */
void nl2sql_string_free(char *s);

/**
 * New scorer with default weights (1 point per clause and nesting level)
 * and default thresholds (Easy <= 1 < Medium <= 3 < Hard).
 */
Nl2SqlScorer *nl2sql_scorer_new(void);

/**
 * New scorer with explicit weights and thresholds. Returns null (with a
 * last-error message) when a weight is negative or thresholds are not
 * ordered.
 */
Nl2SqlScorer *nl2sql_scorer_new_with(double w_join,
                                     double w_group_by,
                                     double w_order_by,
                                     double w_having,
                                     double w_nesting,
                                     double easy_max,
                                     double medium_max);

/**
 * Release a scorer.
 *
 * # Safety
 * `scorer` must come from `nl2sql_scorer_new*` and not be freed twice.
 * Null is a no-op.
 */
void nl2sql_scorer_free(Nl2SqlScorer *scorer);

/**
 * Score one SQL query and assign its difficulty bucket.
 *
 * # Safety
 * `scorer` must be a live scorer handle; `sql` must be a NUL-terminated
 * string; `out_score` and `out_bucket` must be valid for writes.
 */
Nl2SqlStatus nl2sql_score_sql(const Nl2SqlScorer *scorer,
                              const char *sql,
                              double *out_score,
                              Nl2SqlBucket *out_bucket);

/**
 * Extract the final SQL from raw model output (last ```sql fence, last
 * fence of any kind, or the trimmed text). Returns null when nothing
 * usable remains; free the result with [`nl2sql_string_free`].
 *
 * # Safety
 * `raw_output` must be a NUL-terminated string.
 */
char *nl2sql_extract_sql(const char *raw_output);

/**
 * Execute gold and predicted SQL read-only against a database file and
 * compare result sets (multiset rows unless the gold query has ORDER BY,
 * numeric cells within 1e-6 relative tolerance). The comparison outcome
 * lands in `out_verdict`; the status reports only environmental failures.
 *
 * # Safety
 * All pointer arguments must be valid; strings NUL-terminated;
 * `out_verdict` valid for writes.
 */
Nl2SqlStatus nl2sql_execution_match(const char *db_path,
                                    const char *gold_sql,
                                    const char *predicted_sql,
                                    double timeout_secs,
                                    Nl2SqlVerdict *out_verdict);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NL2SQL_H */

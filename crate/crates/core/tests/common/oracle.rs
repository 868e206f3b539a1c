//! The scoring corpus and an independent brute-force recursive counter,
//! shared between the scoring tests and the acceptance suite.

use nl2sql_core::complexity::WeightsConfig;
use nl2sql_core::sql::{
    parse_sql, Expr, FunctionArgs, JoinConstraint, ParseOptions, QueryAst, SelectCore, SelectItem,
    SelectStatement, TableRef,
};

/// (sql, expected score under default weights, SELECT appears inside a
/// string literal). Expected values hand-counted from the scoring rule:
/// one point per join connector, one per GROUP BY / ORDER BY / HAVING
/// present on a select node, and one per nested select plus the nested
/// select's own score.
pub const SCORING_CORPUS: &[(&str, f64, bool)] = &[
    ("SELECT * FROM t", 0.0, false),
    ("SELECT a, b FROM t WHERE a = 1", 0.0, false),
    ("SELECT count(*) FROM t", 0.0, false),
    ("SELECT DISTINCT a FROM t LIMIT 5", 0.0, false),
    ("SELECT a FROM t ORDER BY a", 1.0, false),
    ("SELECT a FROM t GROUP BY a", 1.0, false),
    ("SELECT a FROM t GROUP BY a HAVING count(*) > 1", 2.0, false),
    ("SELECT a FROM t JOIN u ON t.id = u.id", 1.0, false),
    ("SELECT a FROM t JOIN u ON t.id = u.id GROUP BY a ORDER BY a", 3.0, false),
    ("SELECT a FROM t, u WHERE t.id = u.id", 1.0, false),
    ("SELECT a FROM t, u, v", 2.0, false),
    ("SELECT a FROM t LEFT JOIN u ON t.id = u.id RIGHT JOIN v ON u.id = v.id", 2.0, false),
    ("SELECT a FROM t CROSS JOIN u", 1.0, false),
    ("SELECT a FROM t INNER JOIN u USING (id)", 1.0, false),
    ("SELECT a FROM t WHERE a IN (SELECT a FROM u)", 1.0, false),
    ("SELECT a FROM t WHERE a IN (SELECT a FROM u JOIN v ON u.x = v.x)", 2.0, false),
    ("SELECT a FROM t WHERE a NOT IN (SELECT a FROM u WHERE b = 2)", 1.0, false),
    ("SELECT a FROM t WHERE EXISTS (SELECT 1 FROM u WHERE u.id = t.id)", 1.0, false),
    ("SELECT a FROM t WHERE NOT EXISTS (SELECT 1 FROM u)", 1.0, false),
    ("SELECT (SELECT max(b) FROM u) FROM t", 1.0, false),
    ("SELECT a FROM (SELECT a FROM u) AS sub", 1.0, false),
    ("SELECT a FROM (SELECT a FROM u JOIN v ON u.x = v.x) AS sub", 2.0, false),
    ("SELECT a FROM t WHERE a > (SELECT avg(a) FROM t)", 1.0, false),
    ("SELECT a FROM t UNION SELECT a FROM u", 1.0, false),
    ("SELECT a FROM t UNION ALL SELECT a FROM u", 1.0, false),
    ("SELECT a FROM t INTERSECT SELECT a FROM u", 1.0, false),
    ("SELECT a FROM t EXCEPT SELECT a FROM u", 1.0, false),
    ("SELECT a FROM t UNION SELECT a FROM u UNION SELECT a FROM v", 2.0, false),
    ("SELECT a FROM t UNION SELECT a FROM u ORDER BY a", 2.0, false),
    ("SELECT a FROM t JOIN u ON t.x = u.x UNION SELECT a FROM v GROUP BY a", 3.0, false),
    ("SELECT a FROM t WHERE a IN (SELECT a FROM u WHERE b IN (SELECT b FROM v))", 2.0, false),
    ("SELECT a FROM t WHERE a IN (SELECT a FROM u) AND b IN (SELECT b FROM v)", 2.0, false),
    ("SELECT a, (SELECT max(b) FROM u), (SELECT min(b) FROM v) FROM t", 2.0, false),
    ("SELECT a FROM t GROUP BY a HAVING max(b) > (SELECT avg(b) FROM u)", 3.0, false),
    ("SELECT a FROM t ORDER BY a DESC LIMIT 10", 1.0, false),
    ("SELECT a FROM t ORDER BY a, b DESC", 1.0, false),
    ("SELECT t.a, u.b, v.c FROM t JOIN u ON t.id = u.id JOIN v ON u.id = v.id JOIN w ON v.id = w.id", 3.0, false),
    ("SELECT a FROM t WHERE x BETWEEN 1 AND 10 OR y LIKE 'z%'", 0.0, false),
    ("SELECT a FROM t WHERE note = 'has SELECT inside'", 0.0, true),
    ("SELECT CASE WHEN a = 1 THEN 'x' ELSE 'y' END FROM t", 0.0, false),
    ("SELECT CAST(a AS INTEGER) FROM t ORDER BY a", 1.0, false),
    ("SELECT sum(a * b) FROM t GROUP BY c", 1.0, false),
    ("SELECT a FROM t WHERE a IS NOT NULL ORDER BY a LIMIT 1", 1.0, false),
    ("SELECT \"quoted col\" FROM `quoted table` WHERE x = 1", 0.0, false),
    ("SELECT a FROM t JOIN (SELECT b FROM u GROUP BY b) AS s ON t.a = s.b", 3.0, false),
    ("SELECT a FROM (SELECT a FROM (SELECT a FROM t) AS inner1) AS outer1", 2.0, false),
    ("SELECT a FROM t WHERE a IN (SELECT a FROM u UNION SELECT a FROM v)", 2.0, false),
    ("SELECT a, count(*) FROM t JOIN u ON t.x = u.x WHERE t.y > 5 GROUP BY a HAVING count(*) > 2 ORDER BY count(*) DESC LIMIT 3", 4.0, false),
    ("SELECT a FROM t WHERE a = (SELECT max(a) FROM t WHERE b IN (SELECT b FROM u JOIN v ON u.i = v.i) GROUP BY c ORDER BY c LIMIT 1)", 5.0, false),
    ("SELECT x.a FROM t AS x, u AS y JOIN v AS z ON y.i = z.i WHERE x.q = y.q GROUP BY x.a ORDER BY x.a", 4.0, false),
    ("SELECT a FROM t WHERE EXISTS (SELECT 1 FROM u WHERE EXISTS (SELECT 1 FROM v))", 2.0, false),
    ("SELECT upper(name), length(name) FROM people ORDER BY 2", 1.0, false),
    ("SELECT a / (SELECT count(*) FROM u) FROM t", 1.0, false),
    ("SELECT a FROM t HAVING count(*) > 0", 1.0, false),
    ("SELECT -a, +b FROM t WHERE -a < 5", 0.0, false),
    ("SELECT a || b FROM t WHERE a LIKE '%x%' ESCAPE '!'", 0.0, false),
];

pub fn parse(sql: &str) -> QueryAst {
    parse_sql(sql, &ParseOptions::default()).unwrap_or_else(|e| panic!("{sql}: {e}"))
}

// ── Independent oracle ──────────────────────────────────────────────────
//
// A second implementation of the scoring rule, written directly from its
// definition as a plain recursive walk of the AST. It never touches
// ClauseInventory, so it exercises a different code path than score_query.

pub fn oracle_score(ast: &QueryAst, weights: &WeightsConfig) -> f64 {
    oracle_statement(&ast.root, weights)
}

fn oracle_statement(stmt: &SelectStatement, weights: &WeightsConfig) -> f64 {
    let mut points = 0.0;
    if !stmt.order_by.is_empty() {
        points += weights.w_order_by;
    }

    let mut children: Vec<&SelectStatement> = Vec::new();
    points += oracle_core(&stmt.arms[0], weights, &mut children);
    for arm in &stmt.arms[1..] {
        // An extra set-operation arm is a nested select of its own.
        let mut arm_children = Vec::new();
        let arm_points = oracle_core(arm, weights, &mut arm_children);
        let mut arm_total = arm_points;
        for child in arm_children {
            arm_total += weights.w_nesting + oracle_statement(child, weights);
        }
        points += weights.w_nesting + arm_total;
    }
    for term in &stmt.order_by {
        oracle_expr(&term.expr, &mut children);
    }
    if let Some(limit) = &stmt.limit {
        oracle_expr(&limit.limit, &mut children);
        if let Some(offset) = &limit.offset {
            oracle_expr(offset, &mut children);
        }
    }

    for child in children {
        points += weights.w_nesting + oracle_statement(child, weights);
    }
    points
}

fn oracle_core<'a>(
    core: &'a SelectCore,
    weights: &WeightsConfig,
    children: &mut Vec<&'a SelectStatement>,
) -> f64 {
    let mut points = 0.0;
    if let Some(from) = &core.from {
        points += weights.w_join * from.joins.len() as f64;
        if let TableRef::Subquery { query, .. } = &from.first {
            children.push(query);
        }
        for join in &from.joins {
            if let TableRef::Subquery { query, .. } = &join.table {
                children.push(query);
            }
            if let Some(JoinConstraint::On(expr)) = &join.constraint {
                oracle_expr(expr, children);
            }
        }
    }
    if !core.group_by.is_empty() {
        points += weights.w_group_by;
    }
    if core.having.is_some() {
        points += weights.w_having;
    }
    for item in &core.projection {
        if let SelectItem::Expr { expr, .. } = item {
            oracle_expr(expr, children);
        }
    }
    if let Some(w) = &core.where_clause {
        oracle_expr(w, children);
    }
    for e in &core.group_by {
        oracle_expr(e, children);
    }
    if let Some(h) = &core.having {
        oracle_expr(h, children);
    }
    points
}

fn oracle_expr<'a>(expr: &'a Expr, children: &mut Vec<&'a SelectStatement>) {
    match expr {
        Expr::Subquery(q) | Expr::Exists { query: q, .. } | Expr::InSubquery { query: q, .. } => {
            children.push(q);
            if let Expr::InSubquery { operand, .. } = expr {
                oracle_expr(operand, children);
            }
        }
        Expr::Unary { operand, .. } | Expr::IsNull { operand, .. } | Expr::Paren(operand) => {
            oracle_expr(operand, children)
        }
        Expr::Binary { left, right, .. } => {
            oracle_expr(left, children);
            oracle_expr(right, children);
        }
        Expr::Between {
            operand, low, high, ..
        } => {
            oracle_expr(operand, children);
            oracle_expr(low, children);
            oracle_expr(high, children);
        }
        Expr::InList { operand, items, .. } => {
            oracle_expr(operand, children);
            for item in items {
                oracle_expr(item, children);
            }
        }
        Expr::Like {
            operand,
            pattern,
            escape,
            ..
        } => {
            oracle_expr(operand, children);
            oracle_expr(pattern, children);
            if let Some(e) = escape {
                oracle_expr(e, children);
            }
        }
        Expr::Function { args, .. } => {
            if let FunctionArgs::Exprs(exprs) = args {
                for e in exprs {
                    oracle_expr(e, children);
                }
            }
        }
        Expr::Column { .. } | Expr::Number(_) | Expr::String(_) | Expr::Null | Expr::Opaque(_) => {}
    }
}

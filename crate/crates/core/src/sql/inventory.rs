//! Clause inventory: the scoring-relevant clause counts of a parsed query.

use serde::{Deserialize, Serialize};

use super::ast::*;

/// Clause counts for one select node, with one nested inventory per
/// immediate child select (subquery in any position, or set-operation arm
/// beyond the first).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClauseInventory {
    /// Join connectors in FROM: explicit JOIN keywords plus comma joins
    /// (n comma-separated tables contribute n - 1).
    pub join_count: u32,
    pub has_group_by: bool,
    pub has_order_by: bool,
    pub has_having: bool,
    pub subqueries: Vec<ClauseInventory>,
}

impl ClauseInventory {
    /// Total select nodes in this inventory tree (this node plus all
    /// descendants).
    pub fn select_node_count(&self) -> usize {
        1 + self
            .subqueries
            .iter()
            .map(ClauseInventory::select_node_count)
            .sum::<usize>()
    }
}

/// Extract the clause inventory of a parsed query.
///
/// Counts reflect the root select only; every nested select appears as one
/// entry in `subqueries`, recursively. Child order follows the source:
/// projection, FROM, WHERE, GROUP BY, HAVING, then set-operation arms, then
/// subqueries inside the compound-level ORDER BY / LIMIT.
pub fn clause_inventory(ast: &QueryAst) -> ClauseInventory {
    of_statement(&ast.root)
}

fn of_statement(stmt: &SelectStatement) -> ClauseInventory {
    let mut inv = of_core(&stmt.arms[0]);
    inv.has_order_by = !stmt.order_by.is_empty();
    for arm in &stmt.arms[1..] {
        inv.subqueries.push(of_core(arm));
    }
    for term in &stmt.order_by {
        collect_expr(&term.expr, &mut inv.subqueries);
    }
    if let Some(limit) = &stmt.limit {
        collect_expr(&limit.limit, &mut inv.subqueries);
        if let Some(offset) = &limit.offset {
            collect_expr(offset, &mut inv.subqueries);
        }
    }
    inv
}

fn of_core(core: &SelectCore) -> ClauseInventory {
    let mut inv = ClauseInventory {
        join_count: core.from.as_ref().map_or(0, |f| f.joins.len() as u32),
        has_group_by: !core.group_by.is_empty(),
        has_order_by: false,
        has_having: core.having.is_some(),
        subqueries: Vec::new(),
    };

    for item in &core.projection {
        if let SelectItem::Expr { expr, .. } = item {
            collect_expr(expr, &mut inv.subqueries);
        }
    }
    if let Some(from) = &core.from {
        collect_table_ref(&from.first, &mut inv.subqueries);
        for join in &from.joins {
            collect_table_ref(&join.table, &mut inv.subqueries);
            if let Some(JoinConstraint::On(expr)) = &join.constraint {
                collect_expr(expr, &mut inv.subqueries);
            }
        }
    }
    if let Some(w) = &core.where_clause {
        collect_expr(w, &mut inv.subqueries);
    }
    for e in &core.group_by {
        collect_expr(e, &mut inv.subqueries);
    }
    if let Some(h) = &core.having {
        collect_expr(h, &mut inv.subqueries);
    }
    inv
}

fn collect_table_ref(table: &TableRef, out: &mut Vec<ClauseInventory>) {
    if let TableRef::Subquery { query, .. } = table {
        out.push(of_statement(query));
    }
}

fn collect_expr(expr: &Expr, out: &mut Vec<ClauseInventory>) {
    match expr {
        Expr::Column { .. } | Expr::Number(_) | Expr::String(_) | Expr::Null | Expr::Opaque(_) => {}
        Expr::Unary { operand, .. } => collect_expr(operand, out),
        Expr::Binary { left, right, .. } => {
            collect_expr(left, out);
            collect_expr(right, out);
        }
        Expr::IsNull { operand, .. } => collect_expr(operand, out),
        Expr::Between {
            operand, low, high, ..
        } => {
            collect_expr(operand, out);
            collect_expr(low, out);
            collect_expr(high, out);
        }
        Expr::InList { operand, items, .. } => {
            collect_expr(operand, out);
            for item in items {
                collect_expr(item, out);
            }
        }
        Expr::InSubquery { operand, query, .. } => {
            collect_expr(operand, out);
            out.push(of_statement(query));
        }
        Expr::Like {
            operand,
            pattern,
            escape,
            ..
        } => {
            collect_expr(operand, out);
            collect_expr(pattern, out);
            if let Some(e) = escape {
                collect_expr(e, out);
            }
        }
        Expr::Function { args, .. } => {
            if let FunctionArgs::Exprs(exprs) = args {
                for e in exprs {
                    collect_expr(e, out);
                }
            }
        }
        Expr::Exists { query, .. } => out.push(of_statement(query)),
        Expr::Subquery(query) => out.push(of_statement(query)),
        Expr::Paren(inner) => collect_expr(inner, out),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sql::{parse_sql, ParseOptions};

    fn inv(sql: &str) -> ClauseInventory {
        clause_inventory(&parse_sql(sql, &ParseOptions::default()).unwrap())
    }

    #[test]
    fn flat_select_is_empty() {
        let i = inv("SELECT * FROM t");
        assert_eq!(i, ClauseInventory::default());
    }

    #[test]
    fn join_and_group_by() {
        let i = inv("SELECT a FROM t JOIN u ON t.id = u.id GROUP BY a");
        assert_eq!(i.join_count, 1);
        assert!(i.has_group_by);
        assert!(!i.has_order_by);
        assert!(!i.has_having);
        assert!(i.subqueries.is_empty());
    }

    #[test]
    fn where_subquery_nests() {
        let i = inv("SELECT a FROM t WHERE a IN (SELECT a FROM u)");
        assert_eq!(i.join_count, 0);
        assert_eq!(i.subqueries.len(), 1);
        assert_eq!(i.subqueries[0], ClauseInventory::default());
    }

    #[test]
    fn set_op_arms_become_subqueries() {
        let i = inv("SELECT a FROM t JOIN u ON t.x = u.x UNION SELECT a FROM v GROUP BY a");
        assert_eq!(i.join_count, 1);
        assert_eq!(i.subqueries.len(), 1);
        assert!(i.subqueries[0].has_group_by);
    }

    #[test]
    fn compound_order_by_belongs_to_root() {
        let i = inv("SELECT a FROM t UNION SELECT b FROM u ORDER BY 1");
        assert!(i.has_order_by);
        assert!(!i.subqueries[0].has_order_by);
    }

    #[test]
    fn comma_join_formula() {
        assert_eq!(inv("SELECT a FROM t, u, v").join_count, 2);
        assert_eq!(inv("SELECT a FROM t, u JOIN w ON u.x = w.x").join_count, 2);
    }

    #[test]
    fn select_node_count_matches_keyword_count() {
        let sql = "SELECT a FROM (SELECT * FROM t) WHERE a IN (SELECT b FROM u) \
                   UNION SELECT c FROM v";
        let i = inv(sql);
        let keywords = sql.to_ascii_lowercase().matches("select").count();
        assert_eq!(i.select_node_count(), keywords);
    }
}

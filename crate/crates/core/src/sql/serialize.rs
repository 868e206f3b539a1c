//! Canonical SQL text rendering for the AST.
//!
//! Keywords are uppercased and spacing is normalized; identifiers, literals
//! and opaque captures are emitted exactly as stored, so reparsing the output
//! yields a structurally equal tree.

use super::ast::*;
use super::lexer::QuoteKind;

/// Render a parsed query back to SQL text.
pub fn to_sql(ast: &QueryAst) -> String {
    let mut out = String::new();
    write_statement(&mut out, &ast.root);
    out
}

fn write_statement(out: &mut String, stmt: &SelectStatement) {
    write_core(out, &stmt.arms[0]);
    for (op, arm) in stmt.set_ops.iter().zip(&stmt.arms[1..]) {
        out.push(' ');
        out.push_str(op.keyword());
        out.push(' ');
        write_core(out, arm);
    }
    if !stmt.order_by.is_empty() {
        out.push_str(" ORDER BY ");
        for (i, term) in stmt.order_by.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            write_expr(out, &term.expr);
            match term.direction {
                Some(OrderDirection::Asc) => out.push_str(" ASC"),
                Some(OrderDirection::Desc) => out.push_str(" DESC"),
                None => {}
            }
        }
    }
    if let Some(limit) = &stmt.limit {
        out.push_str(" LIMIT ");
        write_expr(out, &limit.limit);
        if let Some(offset) = &limit.offset {
            out.push_str(" OFFSET ");
            write_expr(out, offset);
        }
    }
}

fn write_core(out: &mut String, core: &SelectCore) {
    out.push_str("SELECT ");
    if core.distinct {
        out.push_str("DISTINCT ");
    }
    for (i, item) in core.projection.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        match item {
            SelectItem::Wildcard => out.push('*'),
            SelectItem::QualifiedWildcard(t) => {
                write_ident(out, t);
                out.push_str(".*");
            }
            SelectItem::Expr { expr, alias } => {
                write_expr(out, expr);
                if let Some(alias) = alias {
                    out.push_str(" AS ");
                    write_ident(out, alias);
                }
            }
        }
    }
    if let Some(from) = &core.from {
        out.push_str(" FROM ");
        write_table_ref(out, &from.first);
        for join in &from.joins {
            if join.op == JoinOp::Comma {
                out.push_str(", ");
            } else {
                out.push(' ');
                out.push_str(join.op.keyword());
                out.push(' ');
            }
            write_table_ref(out, &join.table);
            match &join.constraint {
                Some(JoinConstraint::On(expr)) => {
                    out.push_str(" ON ");
                    write_expr(out, expr);
                }
                Some(JoinConstraint::Using(cols)) => {
                    out.push_str(" USING (");
                    for (i, c) in cols.iter().enumerate() {
                        if i > 0 {
                            out.push_str(", ");
                        }
                        write_ident(out, c);
                    }
                    out.push(')');
                }
                None => {}
            }
        }
    }
    if let Some(w) = &core.where_clause {
        out.push_str(" WHERE ");
        write_expr(out, w);
    }
    if !core.group_by.is_empty() {
        out.push_str(" GROUP BY ");
        for (i, e) in core.group_by.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            write_expr(out, e);
        }
    }
    if let Some(h) = &core.having {
        out.push_str(" HAVING ");
        write_expr(out, h);
    }
}

fn write_table_ref(out: &mut String, table: &TableRef) {
    match table {
        TableRef::Named { name, alias } => {
            write_ident(out, name);
            if let Some(alias) = alias {
                out.push_str(" AS ");
                write_ident(out, alias);
            }
        }
        TableRef::Subquery { query, alias } => {
            out.push('(');
            write_statement(out, query);
            out.push(')');
            if let Some(alias) = alias {
                out.push_str(" AS ");
                write_ident(out, alias);
            }
        }
    }
}

fn write_ident(out: &mut String, ident: &Ident) {
    match ident.quote {
        None => out.push_str(&ident.text),
        Some(QuoteKind::Double) => {
            out.push('"');
            out.push_str(&ident.text.replace('"', "\"\""));
            out.push('"');
        }
        Some(QuoteKind::Backtick) => {
            out.push('`');
            out.push_str(&ident.text.replace('`', "``"));
            out.push('`');
        }
    }
}

fn write_expr(out: &mut String, expr: &Expr) {
    match expr {
        Expr::Column { table, column } => {
            if let Some(t) = table {
                write_ident(out, t);
                out.push('.');
            }
            write_ident(out, column);
        }
        Expr::Number(n) => out.push_str(n),
        Expr::String(s) => {
            out.push('\'');
            out.push_str(&s.replace('\'', "''"));
            out.push('\'');
        }
        Expr::Null => out.push_str("NULL"),
        Expr::Unary { op, operand } => match op {
            UnaryOp::Neg => {
                out.push('-');
                write_expr(out, operand);
            }
            UnaryOp::Pos => {
                out.push('+');
                write_expr(out, operand);
            }
            UnaryOp::Not => {
                out.push_str("NOT ");
                write_expr(out, operand);
            }
        },
        Expr::Binary { left, op, right } => {
            write_expr(out, left);
            out.push(' ');
            out.push_str(op.text());
            out.push(' ');
            write_expr(out, right);
        }
        Expr::IsNull { operand, negated } => {
            write_expr(out, operand);
            out.push_str(if *negated { " IS NOT NULL" } else { " IS NULL" });
        }
        Expr::Between {
            operand,
            negated,
            low,
            high,
        } => {
            write_expr(out, operand);
            out.push_str(if *negated {
                " NOT BETWEEN "
            } else {
                " BETWEEN "
            });
            write_expr(out, low);
            out.push_str(" AND ");
            write_expr(out, high);
        }
        Expr::InList {
            operand,
            negated,
            items,
        } => {
            write_expr(out, operand);
            out.push_str(if *negated { " NOT IN (" } else { " IN (" });
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(out, item);
            }
            out.push(')');
        }
        Expr::InSubquery {
            operand,
            negated,
            query,
        } => {
            write_expr(out, operand);
            out.push_str(if *negated { " NOT IN (" } else { " IN (" });
            write_statement(out, query);
            out.push(')');
        }
        Expr::Like {
            operand,
            negated,
            pattern,
            escape,
        } => {
            write_expr(out, operand);
            out.push_str(if *negated { " NOT LIKE " } else { " LIKE " });
            write_expr(out, pattern);
            if let Some(escape) = escape {
                out.push_str(" ESCAPE ");
                write_expr(out, escape);
            }
        }
        Expr::Function {
            name,
            distinct,
            args,
        } => {
            write_ident(out, name);
            out.push('(');
            if *distinct {
                out.push_str("DISTINCT ");
            }
            match args {
                FunctionArgs::Star => out.push('*'),
                FunctionArgs::Exprs(exprs) => {
                    for (i, e) in exprs.iter().enumerate() {
                        if i > 0 {
                            out.push_str(", ");
                        }
                        write_expr(out, e);
                    }
                }
            }
            out.push(')');
        }
        Expr::Exists { negated, query } => {
            if *negated {
                out.push_str("NOT ");
            }
            out.push_str("EXISTS (");
            write_statement(out, query);
            out.push(')');
        }
        Expr::Subquery(query) => {
            out.push('(');
            write_statement(out, query);
            out.push(')');
        }
        Expr::Paren(inner) => {
            out.push('(');
            write_expr(out, inner);
            out.push(')');
        }
        Expr::Opaque(text) => out.push_str(text),
    }
}

//! AST for the SELECT subset understood by the toolkit.
//!
//! The tree is deliberately close to the source text: identifiers remember
//! their quoting, numeric literals keep their raw spelling, and parenthesized
//! expressions are explicit nodes. This is what makes the
//! serialize-then-reparse round trip structural.

pub use super::lexer::QuoteKind;

/// An identifier with its original quoting style.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ident {
    pub text: String,
    pub quote: Option<QuoteKind>,
}

impl Ident {
    pub fn bare(text: impl Into<String>) -> Self {
        Ident {
            text: text.into(),
            quote: None,
        }
    }

    /// Case-folded form used for case-insensitive comparisons.
    pub fn normalized(&self) -> String {
        self.text.to_ascii_lowercase()
    }
}

/// A parsed top-level query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryAst {
    pub root: SelectStatement,
}

/// A SELECT statement: one or more cores chained by set operators, with the
/// compound-level ORDER BY / LIMIT that SQLite attaches to the whole chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectStatement {
    /// Set-operation arms, in source order. Always at least one.
    pub arms: Vec<SelectCore>,
    /// Operator between `arms[i]` and `arms[i + 1]`; length is `arms.len() - 1`.
    pub set_ops: Vec<SetOperator>,
    pub order_by: Vec<OrderingTerm>,
    pub limit: Option<LimitClause>,
}

impl SelectStatement {
    pub fn is_compound(&self) -> bool {
        self.arms.len() > 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetOperator {
    Union,
    UnionAll,
    Intersect,
    Except,
}

impl SetOperator {
    pub fn keyword(self) -> &'static str {
        match self {
            SetOperator::Union => "UNION",
            SetOperator::UnionAll => "UNION ALL",
            SetOperator::Intersect => "INTERSECT",
            SetOperator::Except => "EXCEPT",
        }
    }
}

/// A single SELECT core (projection + FROM + WHERE + GROUP BY + HAVING).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectCore {
    pub distinct: bool,
    pub projection: Vec<SelectItem>,
    pub from: Option<FromClause>,
    pub where_clause: Option<Expr>,
    pub group_by: Vec<Expr>,
    pub having: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SelectItem {
    /// `*`
    Wildcard,
    /// `t.*`
    QualifiedWildcard(Ident),
    /// `expr [AS alias]`
    Expr { expr: Expr, alias: Option<Ident> },
}

/// FROM clause: a first table reference plus zero or more join steps.
/// Comma-separated tables are recorded as [`JoinOp::Comma`] steps, so
/// `joins.len()` is exactly the number of join connectors in the clause.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FromClause {
    pub first: TableRef,
    pub joins: Vec<Join>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Join {
    pub op: JoinOp,
    pub table: TableRef,
    pub constraint: Option<JoinConstraint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JoinOp {
    /// `FROM a, b`
    Comma,
    /// `JOIN` / `INNER JOIN`
    Inner,
    Left,
    Right,
    Full,
    Cross,
}

impl JoinOp {
    pub fn keyword(self) -> &'static str {
        match self {
            JoinOp::Comma => ",",
            JoinOp::Inner => "JOIN",
            JoinOp::Left => "LEFT JOIN",
            JoinOp::Right => "RIGHT JOIN",
            JoinOp::Full => "FULL JOIN",
            JoinOp::Cross => "CROSS JOIN",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum JoinConstraint {
    On(Expr),
    Using(Vec<Ident>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TableRef {
    Named {
        name: Ident,
        alias: Option<Ident>,
    },
    /// `(SELECT ...) [AS alias]`
    Subquery {
        query: Box<SelectStatement>,
        alias: Option<Ident>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderingTerm {
    pub expr: Expr,
    pub direction: Option<OrderDirection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderDirection {
    Asc,
    Desc,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LimitClause {
    pub limit: Expr,
    pub offset: Option<Expr>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Pos,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Or,
    And,
    Eq,
    NotEq,
    Lt,
    LtEq,
    Gt,
    GtEq,
    Plus,
    Minus,
    Multiply,
    Divide,
    Modulo,
    Concat,
}

impl BinaryOp {
    pub fn text(self) -> &'static str {
        match self {
            BinaryOp::Or => "OR",
            BinaryOp::And => "AND",
            BinaryOp::Eq => "=",
            BinaryOp::NotEq => "!=",
            BinaryOp::Lt => "<",
            BinaryOp::LtEq => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::GtEq => ">=",
            BinaryOp::Plus => "+",
            BinaryOp::Minus => "-",
            BinaryOp::Multiply => "*",
            BinaryOp::Divide => "/",
            BinaryOp::Modulo => "%",
            BinaryOp::Concat => "||",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FunctionArgs {
    /// `COUNT(*)`
    Star,
    Exprs(Vec<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Column {
        table: Option<Ident>,
        column: Ident,
    },
    /// Numeric literal, raw source spelling.
    Number(String),
    /// String literal, inner text.
    String(String),
    Null,
    Unary {
        op: UnaryOp,
        operand: Box<Expr>,
    },
    Binary {
        left: Box<Expr>,
        op: BinaryOp,
        right: Box<Expr>,
    },
    /// `expr IS [NOT] NULL`
    IsNull {
        operand: Box<Expr>,
        negated: bool,
    },
    Between {
        operand: Box<Expr>,
        negated: bool,
        low: Box<Expr>,
        high: Box<Expr>,
    },
    InList {
        operand: Box<Expr>,
        negated: bool,
        items: Vec<Expr>,
    },
    InSubquery {
        operand: Box<Expr>,
        negated: bool,
        query: Box<SelectStatement>,
    },
    Like {
        operand: Box<Expr>,
        negated: bool,
        pattern: Box<Expr>,
        escape: Option<Box<Expr>>,
    },
    Function {
        name: Ident,
        distinct: bool,
        args: FunctionArgs,
    },
    Exists {
        negated: bool,
        query: Box<SelectStatement>,
    },
    /// Scalar subquery: `(SELECT ...)` in expression position.
    Subquery(Box<SelectStatement>),
    /// Explicit parentheses from the source.
    Paren(Box<Expr>),
    /// Construct the parser accepts but does not model (CASE ... END,
    /// CAST(...)). Kept verbatim; contributes nothing to clause counts.
    Opaque(String),
}

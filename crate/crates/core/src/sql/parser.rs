//! Recursive-descent parser for the SELECT subset.

use super::ast::*;
use super::lexer::{tokenize, QuoteKind, Spanned, Sym, Tok};
use super::{ParseError, ParseOptions};

/// Statement-head keywords we recognize but do not parse.
const UNSUPPORTED_HEADS: &[&str] = &[
    "INSERT", "UPDATE", "DELETE", "CREATE", "DROP", "ALTER", "REPLACE", "PRAGMA", "ATTACH",
    "DETACH", "VACUUM", "ANALYZE", "EXPLAIN", "BEGIN", "COMMIT", "ROLLBACK", "WITH",
];

/// Words that terminate a bare (AS-less) alias.
const RESERVED: &[&str] = &[
    "FROM",
    "WHERE",
    "GROUP",
    "HAVING",
    "ORDER",
    "LIMIT",
    "OFFSET",
    "UNION",
    "INTERSECT",
    "EXCEPT",
    "JOIN",
    "INNER",
    "LEFT",
    "RIGHT",
    "FULL",
    "OUTER",
    "CROSS",
    "NATURAL",
    "ON",
    "USING",
    "AND",
    "OR",
    "NOT",
    "AS",
    "ASC",
    "DESC",
    "IN",
    "LIKE",
    "BETWEEN",
    "IS",
    "NULL",
    "SELECT",
    "DISTINCT",
    "ALL",
    "EXISTS",
    "CASE",
    "WHEN",
    "THEN",
    "ELSE",
    "END",
    "CAST",
    "ESCAPE",
    "SET",
];

pub(super) struct Parser<'a> {
    toks: &'a [Spanned],
    pos: usize,
    depth: usize,
    max_depth: usize,
    src_len: usize,
}

pub(super) fn parse(text: &str, options: &ParseOptions) -> Result<QueryAst, ParseError> {
    let toks = tokenize(text)?;
    let mut p = Parser {
        toks: &toks,
        pos: 0,
        depth: 0,
        max_depth: options.max_depth,
        src_len: text.len(),
    };

    let Some(first) = p.toks.first() else {
        return Err(ParseError::Syntax {
            line: 1,
            column: 1,
            offset: 0,
            message: "expected SELECT statement, found end of input".into(),
        });
    };
    if let Tok::Word { text, quote: None } = &first.tok {
        let upper = text.to_ascii_uppercase();
        if UNSUPPORTED_HEADS.contains(&upper.as_str()) {
            return Err(ParseError::UnsupportedStatement { kind: upper });
        }
    }

    let root = p.select_statement()?;
    p.eat_symbol(Sym::Semicolon);
    if let Some(extra) = p.toks.get(p.pos) {
        return Err(p.err_at(
            extra,
            format!("unexpected {} after statement", extra.tok.describe()),
        ));
    }
    Ok(QueryAst { root })
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a Spanned> {
        self.toks.get(self.pos)
    }

    fn bump(&mut self) -> Option<&'a Spanned> {
        let t = self.toks.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn err_at(&self, tok: &Spanned, message: String) -> ParseError {
        ParseError::Syntax {
            line: tok.line,
            column: tok.column,
            offset: tok.offset,
            message,
        }
    }

    fn err_here(&self, expected: &str) -> ParseError {
        match self.peek() {
            Some(t) => self.err_at(
                t,
                format!("expected {expected}, found {}", t.tok.describe()),
            ),
            None => {
                let (line, column) = self
                    .toks
                    .last()
                    .map(|t| (t.line, t.column))
                    .unwrap_or((1, 1));
                ParseError::Syntax {
                    line,
                    column,
                    offset: self.src_len,
                    message: format!("expected {expected}, found end of input"),
                }
            }
        }
    }

    /// Is the current token the given unquoted keyword (case-insensitive)?
    fn at_keyword(&self, kw: &str) -> bool {
        matches!(
            self.peek(),
            Some(Spanned { tok: Tok::Word { text, quote: None }, .. }) if text.eq_ignore_ascii_case(kw)
        )
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.at_keyword(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            Err(self.err_here(kw))
        }
    }

    fn at_symbol(&self, sym: Sym) -> bool {
        matches!(self.peek(), Some(Spanned { tok: Tok::Symbol(s), .. }) if *s == sym)
    }

    fn eat_symbol(&mut self, sym: Sym) -> bool {
        if self.at_symbol(sym) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_symbol(&mut self, sym: Sym) -> Result<(), ParseError> {
        if self.eat_symbol(sym) {
            Ok(())
        } else {
            Err(self.err_here(&format!("\"{}\"", sym.text())))
        }
    }

    /// Consume the current token as an identifier.
    fn expect_ident(&mut self, what: &str) -> Result<Ident, ParseError> {
        match self.peek() {
            Some(Spanned {
                tok: Tok::Word { text, quote },
                ..
            }) => {
                let id = Ident {
                    text: text.clone(),
                    quote: *quote,
                };
                self.pos += 1;
                Ok(id)
            }
            _ => Err(self.err_here(what)),
        }
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > self.max_depth {
            Err(self.err_here("shallower query (nesting too deep)"))
        } else {
            Ok(())
        }
    }

    // ── Statements ──────────────────────────────────────────────────────

    fn select_statement(&mut self) -> Result<SelectStatement, ParseError> {
        self.enter()?;
        let mut arms = vec![self.select_core()?];
        let mut set_ops = Vec::new();
        loop {
            let op = if self.eat_keyword("UNION") {
                if self.eat_keyword("ALL") {
                    SetOperator::UnionAll
                } else {
                    SetOperator::Union
                }
            } else if self.eat_keyword("INTERSECT") {
                SetOperator::Intersect
            } else if self.eat_keyword("EXCEPT") {
                SetOperator::Except
            } else {
                break;
            };
            set_ops.push(op);
            arms.push(self.select_core()?);
        }

        let mut order_by = Vec::new();
        if self.eat_keyword("ORDER") {
            self.expect_keyword("BY")?;
            loop {
                let expr = self.expr()?;
                let direction = if self.eat_keyword("ASC") {
                    Some(OrderDirection::Asc)
                } else if self.eat_keyword("DESC") {
                    Some(OrderDirection::Desc)
                } else {
                    None
                };
                order_by.push(OrderingTerm { expr, direction });
                if !self.eat_symbol(Sym::Comma) {
                    break;
                }
            }
        }

        let limit = if self.eat_keyword("LIMIT") {
            let first = self.expr()?;
            if self.eat_keyword("OFFSET") {
                let offset = self.expr()?;
                Some(LimitClause {
                    limit: first,
                    offset: Some(offset),
                })
            } else if self.eat_symbol(Sym::Comma) {
                // `LIMIT o, n` means LIMIT n OFFSET o.
                let second = self.expr()?;
                Some(LimitClause {
                    limit: second,
                    offset: Some(first),
                })
            } else {
                Some(LimitClause {
                    limit: first,
                    offset: None,
                })
            }
        } else {
            None
        };

        self.depth -= 1;
        Ok(SelectStatement {
            arms,
            set_ops,
            order_by,
            limit,
        })
    }

    fn select_core(&mut self) -> Result<SelectCore, ParseError> {
        self.expect_keyword("SELECT")?;
        let distinct = if self.eat_keyword("DISTINCT") {
            true
        } else {
            self.eat_keyword("ALL");
            false
        };

        let mut projection = vec![self.select_item()?];
        while self.eat_symbol(Sym::Comma) {
            projection.push(self.select_item()?);
        }

        let from = if self.eat_keyword("FROM") {
            Some(self.from_clause()?)
        } else {
            None
        };
        let where_clause = if self.eat_keyword("WHERE") {
            Some(self.expr()?)
        } else {
            None
        };
        let mut group_by = Vec::new();
        if self.eat_keyword("GROUP") {
            self.expect_keyword("BY")?;
            loop {
                group_by.push(self.expr()?);
                if !self.eat_symbol(Sym::Comma) {
                    break;
                }
            }
        }
        let having = if self.eat_keyword("HAVING") {
            Some(self.expr()?)
        } else {
            None
        };

        Ok(SelectCore {
            distinct,
            projection,
            from,
            where_clause,
            group_by,
            having,
        })
    }

    fn select_item(&mut self) -> Result<SelectItem, ParseError> {
        if self.eat_symbol(Sym::Star) {
            return Ok(SelectItem::Wildcard);
        }
        // `t.*`
        if let Some(Spanned {
            tok: Tok::Word { text, quote },
            ..
        }) = self.peek()
        {
            if matches!(
                self.toks.get(self.pos + 1),
                Some(Spanned {
                    tok: Tok::Symbol(Sym::Dot),
                    ..
                })
            ) && matches!(
                self.toks.get(self.pos + 2),
                Some(Spanned {
                    tok: Tok::Symbol(Sym::Star),
                    ..
                })
            ) {
                let table = Ident {
                    text: text.clone(),
                    quote: *quote,
                };
                self.pos += 3;
                return Ok(SelectItem::QualifiedWildcard(table));
            }
        }

        let expr = self.expr()?;
        let alias = self.maybe_alias()?;
        Ok(SelectItem::Expr { expr, alias })
    }

    /// `[AS] alias` where a bare alias must not be a reserved word.
    fn maybe_alias(&mut self) -> Result<Option<Ident>, ParseError> {
        if self.eat_keyword("AS") {
            return Ok(Some(self.expect_ident("alias after AS")?));
        }
        if let Some(Spanned {
            tok: Tok::Word { text, quote },
            ..
        }) = self.peek()
        {
            let reserved =
                quote.is_none() && RESERVED.iter().any(|kw| text.eq_ignore_ascii_case(kw));
            if !reserved {
                let id = Ident {
                    text: text.clone(),
                    quote: *quote,
                };
                self.pos += 1;
                return Ok(Some(id));
            }
        }
        Ok(None)
    }

    // ── FROM clause ─────────────────────────────────────────────────────

    // Named after the grammar production, not a conversion.
    #[allow(clippy::wrong_self_convention)]
    fn from_clause(&mut self) -> Result<FromClause, ParseError> {
        let first = self.table_ref()?;
        let mut joins = Vec::new();
        loop {
            let op = if self.eat_symbol(Sym::Comma) {
                JoinOp::Comma
            } else if self.at_keyword("JOIN")
                || self.at_keyword("INNER")
                || self.at_keyword("LEFT")
                || self.at_keyword("RIGHT")
                || self.at_keyword("FULL")
                || self.at_keyword("CROSS")
            {
                self.join_op()?
            } else {
                break;
            };
            let table = self.table_ref()?;
            let constraint = if op != JoinOp::Comma {
                if self.eat_keyword("ON") {
                    Some(JoinConstraint::On(self.expr()?))
                } else if self.eat_keyword("USING") {
                    self.expect_symbol(Sym::LParen)?;
                    let mut cols = vec![self.expect_ident("column name")?];
                    while self.eat_symbol(Sym::Comma) {
                        cols.push(self.expect_ident("column name")?);
                    }
                    self.expect_symbol(Sym::RParen)?;
                    Some(JoinConstraint::Using(cols))
                } else {
                    None
                }
            } else {
                None
            };
            joins.push(Join {
                op,
                table,
                constraint,
            });
        }
        Ok(FromClause { first, joins })
    }

    fn join_op(&mut self) -> Result<JoinOp, ParseError> {
        if self.eat_keyword("JOIN") {
            return Ok(JoinOp::Inner);
        }
        if self.eat_keyword("INNER") {
            self.expect_keyword("JOIN")?;
            return Ok(JoinOp::Inner);
        }
        if self.eat_keyword("CROSS") {
            self.expect_keyword("JOIN")?;
            return Ok(JoinOp::Cross);
        }
        let op = if self.eat_keyword("LEFT") {
            JoinOp::Left
        } else if self.eat_keyword("RIGHT") {
            JoinOp::Right
        } else if self.eat_keyword("FULL") {
            JoinOp::Full
        } else {
            return Err(self.err_here("JOIN"));
        };
        self.eat_keyword("OUTER");
        self.expect_keyword("JOIN")?;
        Ok(op)
    }

    fn table_ref(&mut self) -> Result<TableRef, ParseError> {
        if self.eat_symbol(Sym::LParen) {
            if !self.at_keyword("SELECT") {
                return Err(self.err_here("subquery (SELECT) after \"(\" in FROM"));
            }
            let query = Box::new(self.select_statement()?);
            self.expect_symbol(Sym::RParen)?;
            let alias = self.maybe_alias()?;
            return Ok(TableRef::Subquery { query, alias });
        }
        let name = self.expect_ident("table name")?;
        let alias = self.maybe_alias()?;
        Ok(TableRef::Named { name, alias })
    }

    // ── Expressions ─────────────────────────────────────────────────────

    fn expr(&mut self) -> Result<Expr, ParseError> {
        self.or_expr()
    }

    fn or_expr(&mut self) -> Result<Expr, ParseError> {
        let mut left = self.and_expr()?;
        while self.eat_keyword("OR") {
            let right = self.and_expr()?;
            left = Expr::Binary {
                left: Box::new(left),
                op: BinaryOp::Or,
                right: Box::new(right),
            };
        }
        Ok(left)
    }

    fn and_expr(&mut self) -> Result<Expr, ParseError> {
        let mut left = self.not_expr()?;
        while self.eat_keyword("AND") {
            let right = self.not_expr()?;
            left = Expr::Binary {
                left: Box::new(left),
                op: BinaryOp::And,
                right: Box::new(right),
            };
        }
        Ok(left)
    }

    fn not_expr(&mut self) -> Result<Expr, ParseError> {
        if self.eat_keyword("NOT") {
            if self.at_keyword("EXISTS") {
                return self.exists_expr(true);
            }
            let operand = self.not_expr()?;
            return Ok(Expr::Unary {
                op: UnaryOp::Not,
                operand: Box::new(operand),
            });
        }
        self.comparison()
    }

    fn comparison(&mut self) -> Result<Expr, ParseError> {
        let mut left = self.additive()?;
        loop {
            let op = if self.eat_symbol(Sym::Eq) {
                Some(BinaryOp::Eq)
            } else if self.eat_symbol(Sym::NotEq) {
                Some(BinaryOp::NotEq)
            } else if self.eat_symbol(Sym::LtEq) {
                Some(BinaryOp::LtEq)
            } else if self.eat_symbol(Sym::GtEq) {
                Some(BinaryOp::GtEq)
            } else if self.eat_symbol(Sym::Lt) {
                Some(BinaryOp::Lt)
            } else if self.eat_symbol(Sym::Gt) {
                Some(BinaryOp::Gt)
            } else {
                None
            };
            if let Some(op) = op {
                let right = self.additive()?;
                left = Expr::Binary {
                    left: Box::new(left),
                    op,
                    right: Box::new(right),
                };
                continue;
            }

            if self.eat_keyword("IS") {
                let negated = self.eat_keyword("NOT");
                self.expect_keyword("NULL")?;
                left = Expr::IsNull {
                    operand: Box::new(left),
                    negated,
                };
                continue;
            }

            let negated = if self.at_keyword("NOT")
                && matches!(
                    self.toks.get(self.pos + 1),
                    Some(Spanned { tok: Tok::Word { text, quote: None }, .. })
                        if text.eq_ignore_ascii_case("IN")
                            || text.eq_ignore_ascii_case("LIKE")
                            || text.eq_ignore_ascii_case("BETWEEN")
                ) {
                self.pos += 1;
                true
            } else {
                false
            };

            if self.eat_keyword("BETWEEN") {
                let low = self.additive()?;
                self.expect_keyword("AND")?;
                let high = self.additive()?;
                left = Expr::Between {
                    operand: Box::new(left),
                    negated,
                    low: Box::new(low),
                    high: Box::new(high),
                };
                continue;
            }
            if self.eat_keyword("IN") {
                self.expect_symbol(Sym::LParen)?;
                if self.at_keyword("SELECT") {
                    let query = Box::new(self.select_statement()?);
                    self.expect_symbol(Sym::RParen)?;
                    left = Expr::InSubquery {
                        operand: Box::new(left),
                        negated,
                        query,
                    };
                } else {
                    let mut items = vec![self.expr()?];
                    while self.eat_symbol(Sym::Comma) {
                        items.push(self.expr()?);
                    }
                    self.expect_symbol(Sym::RParen)?;
                    left = Expr::InList {
                        operand: Box::new(left),
                        negated,
                        items,
                    };
                }
                continue;
            }
            if self.eat_keyword("LIKE") {
                let pattern = self.additive()?;
                let escape = if self.eat_keyword("ESCAPE") {
                    Some(Box::new(self.additive()?))
                } else {
                    None
                };
                left = Expr::Like {
                    operand: Box::new(left),
                    negated,
                    pattern: Box::new(pattern),
                    escape,
                };
                continue;
            }
            if negated {
                return Err(self.err_here("IN, LIKE or BETWEEN after NOT"));
            }
            break;
        }
        Ok(left)
    }

    fn additive(&mut self) -> Result<Expr, ParseError> {
        let mut left = self.multiplicative()?;
        loop {
            let op = if self.eat_symbol(Sym::Plus) {
                BinaryOp::Plus
            } else if self.eat_symbol(Sym::Minus) {
                BinaryOp::Minus
            } else {
                break;
            };
            let right = self.multiplicative()?;
            left = Expr::Binary {
                left: Box::new(left),
                op,
                right: Box::new(right),
            };
        }
        Ok(left)
    }

    fn multiplicative(&mut self) -> Result<Expr, ParseError> {
        let mut left = self.concat()?;
        loop {
            let op = if self.eat_symbol(Sym::Star) {
                BinaryOp::Multiply
            } else if self.eat_symbol(Sym::Slash) {
                BinaryOp::Divide
            } else if self.eat_symbol(Sym::Percent) {
                BinaryOp::Modulo
            } else {
                break;
            };
            let right = self.concat()?;
            left = Expr::Binary {
                left: Box::new(left),
                op,
                right: Box::new(right),
            };
        }
        Ok(left)
    }

    fn concat(&mut self) -> Result<Expr, ParseError> {
        let mut left = self.unary()?;
        while self.eat_symbol(Sym::Concat) {
            let right = self.unary()?;
            left = Expr::Binary {
                left: Box::new(left),
                op: BinaryOp::Concat,
                right: Box::new(right),
            };
        }
        Ok(left)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat_symbol(Sym::Minus) {
            let operand = self.unary()?;
            return Ok(Expr::Unary {
                op: UnaryOp::Neg,
                operand: Box::new(operand),
            });
        }
        if self.eat_symbol(Sym::Plus) {
            let operand = self.unary()?;
            return Ok(Expr::Unary {
                op: UnaryOp::Pos,
                operand: Box::new(operand),
            });
        }
        self.primary()
    }

    fn exists_expr(&mut self, negated: bool) -> Result<Expr, ParseError> {
        self.expect_keyword("EXISTS")?;
        self.expect_symbol(Sym::LParen)?;
        let query = Box::new(self.select_statement()?);
        self.expect_symbol(Sym::RParen)?;
        Ok(Expr::Exists { negated, query })
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let Some(t) = self.peek() else {
            return Err(self.err_here("expression"));
        };
        match &t.tok {
            Tok::Number(n) => {
                let n = n.clone();
                self.pos += 1;
                Ok(Expr::Number(n))
            }
            Tok::Str(s) => {
                let s = s.clone();
                self.pos += 1;
                Ok(Expr::String(s))
            }
            Tok::Symbol(Sym::LParen) => {
                self.pos += 1;
                if self.at_keyword("SELECT") {
                    let query = Box::new(self.select_statement()?);
                    self.expect_symbol(Sym::RParen)?;
                    Ok(Expr::Subquery(query))
                } else {
                    let inner = self.expr()?;
                    self.expect_symbol(Sym::RParen)?;
                    Ok(Expr::Paren(Box::new(inner)))
                }
            }
            Tok::Word { text, quote } => {
                if quote.is_none() {
                    if text.eq_ignore_ascii_case("NULL") {
                        self.pos += 1;
                        return Ok(Expr::Null);
                    }
                    if text.eq_ignore_ascii_case("EXISTS") {
                        return self.exists_expr(false);
                    }
                    if text.eq_ignore_ascii_case("CASE") {
                        return self.opaque_case();
                    }
                    if text.eq_ignore_ascii_case("CAST") {
                        return self.opaque_cast();
                    }
                }
                let name = Ident {
                    text: text.clone(),
                    quote: *quote,
                };
                self.pos += 1;

                if self.at_symbol(Sym::LParen) {
                    self.pos += 1;
                    let distinct = self.eat_keyword("DISTINCT");
                    let args = if self.eat_symbol(Sym::RParen) {
                        FunctionArgs::Exprs(Vec::new())
                    } else if self.at_symbol(Sym::Star) {
                        self.pos += 1;
                        self.expect_symbol(Sym::RParen)?;
                        FunctionArgs::Star
                    } else {
                        let mut args = vec![self.expr()?];
                        while self.eat_symbol(Sym::Comma) {
                            args.push(self.expr()?);
                        }
                        self.expect_symbol(Sym::RParen)?;
                        FunctionArgs::Exprs(args)
                    };
                    return Ok(Expr::Function {
                        name,
                        distinct,
                        args,
                    });
                }

                if self.at_symbol(Sym::Dot) {
                    self.pos += 1;
                    let column = self.expect_ident("column name after \".\"")?;
                    return Ok(Expr::Column {
                        table: Some(name),
                        column,
                    });
                }
                Ok(Expr::Column {
                    table: None,
                    column: name,
                })
            }
            _ => Err(self.err_here("expression")),
        }
    }

    /// Capture `CASE ... END` verbatim. Nested CASEs are balanced.
    fn opaque_case(&mut self) -> Result<Expr, ParseError> {
        let mut parts = Vec::new();
        let mut depth = 0usize;
        loop {
            let Some(t) = self.bump() else {
                return Err(self.err_here("END to close CASE"));
            };
            if let Tok::Word { text, quote: None } = &t.tok {
                if text.eq_ignore_ascii_case("CASE") {
                    depth += 1;
                } else if text.eq_ignore_ascii_case("END") {
                    depth -= 1;
                }
            }
            parts.push(render_token(&t.tok));
            if depth == 0 {
                break;
            }
        }
        Ok(Expr::Opaque(parts.join(" ")))
    }

    /// Capture `CAST ( ... )` verbatim with balanced parentheses.
    fn opaque_cast(&mut self) -> Result<Expr, ParseError> {
        let mut parts = Vec::new();
        let kw = self.bump().expect("CAST token");
        parts.push(render_token(&kw.tok));
        if !self.at_symbol(Sym::LParen) {
            return Err(self.err_here("\"(\" after CAST"));
        }
        let mut depth = 0usize;
        loop {
            let Some(t) = self.bump() else {
                return Err(self.err_here("\")\" to close CAST"));
            };
            match &t.tok {
                Tok::Symbol(Sym::LParen) => depth += 1,
                Tok::Symbol(Sym::RParen) => depth -= 1,
                _ => {}
            }
            parts.push(render_token(&t.tok));
            if depth == 0 {
                break;
            }
        }
        Ok(Expr::Opaque(parts.join(" ")))
    }
}

/// Re-render one token as SQL text (used for opaque captures).
pub(super) fn render_token(tok: &Tok) -> String {
    match tok {
        Tok::Word { text, quote: None } => text.clone(),
        Tok::Word {
            text,
            quote: Some(QuoteKind::Double),
        } => format!("\"{}\"", text.replace('"', "\"\"")),
        Tok::Word {
            text,
            quote: Some(QuoteKind::Backtick),
        } => format!("`{}`", text.replace('`', "``")),
        Tok::Number(n) => n.clone(),
        Tok::Str(s) => format!("'{}'", s.replace('\'', "''")),
        Tok::Symbol(s) => s.text().to_string(),
    }
}

//! Tokenizer for the SELECT dialect accepted by [`crate::sql::parse_sql`].

use super::ParseError;

/// How an identifier was quoted in the source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuoteKind {
    Double,
    Backtick,
}

/// Punctuation and operator tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sym {
    Comma,
    Dot,
    LParen,
    RParen,
    Semicolon,
    Star,
    Plus,
    Minus,
    Slash,
    Percent,
    Eq,
    NotEq,
    Lt,
    LtEq,
    Gt,
    GtEq,
    Concat,
}

impl Sym {
    pub fn text(self) -> &'static str {
        match self {
            Sym::Comma => ",",
            Sym::Dot => ".",
            Sym::LParen => "(",
            Sym::RParen => ")",
            Sym::Semicolon => ";",
            Sym::Star => "*",
            Sym::Plus => "+",
            Sym::Minus => "-",
            Sym::Slash => "/",
            Sym::Percent => "%",
            Sym::Eq => "=",
            Sym::NotEq => "!=",
            Sym::Lt => "<",
            Sym::LtEq => "<=",
            Sym::Gt => ">",
            Sym::GtEq => ">=",
            Sym::Concat => "||",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    /// Bare or quoted word: identifier or keyword (keywords are never quoted).
    Word {
        text: String,
        quote: Option<QuoteKind>,
    },
    /// Numeric literal, kept as raw source text.
    Number(String),
    /// String literal, inner text with quote escapes resolved.
    Str(String),
    Symbol(Sym),
}

impl Tok {
    /// Rendering used in error messages.
    pub fn describe(&self) -> String {
        match self {
            Tok::Word { text, .. } => format!("\"{text}\""),
            Tok::Number(n) => format!("number {n}"),
            Tok::Str(_) => "string literal".to_string(),
            Tok::Symbol(s) => format!("\"{}\"", s.text()),
        }
    }
}

/// A token plus its source position (1-based line and column).
#[derive(Debug, Clone, PartialEq)]
pub struct Spanned {
    pub tok: Tok,
    pub line: u32,
    pub column: u32,
    pub offset: usize,
}

struct Cursor<'a> {
    src: &'a [u8],
    pos: usize,
    line: u32,
    column: u32,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn peek_at(&self, ahead: usize) -> Option<u8> {
        self.src.get(self.pos + ahead).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let b = self.peek()?;
        self.pos += 1;
        if b == b'\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(b)
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            line: self.line,
            column: self.column,
            offset: self.pos,
            message: message.into(),
        }
    }
}

fn is_word_start(b: u8) -> bool {
    b.is_ascii_alphabetic() || b == b'_'
}

fn is_word_continue(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_'
}

/// Tokenize `text`, skipping whitespace and `--` / `/* */` comments.
pub fn tokenize(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let mut cur = Cursor {
        src: text.as_bytes(),
        pos: 0,
        line: 1,
        column: 1,
    };
    let mut out = Vec::new();

    loop {
        // Skip whitespace and comments.
        loop {
            match cur.peek() {
                Some(b) if b.is_ascii_whitespace() => {
                    cur.bump();
                }
                Some(b'-') if cur.peek_at(1) == Some(b'-') => {
                    while let Some(b) = cur.peek() {
                        if b == b'\n' {
                            break;
                        }
                        cur.bump();
                    }
                }
                Some(b'/') if cur.peek_at(1) == Some(b'*') => {
                    cur.bump();
                    cur.bump();
                    loop {
                        match cur.peek() {
                            Some(b'*') if cur.peek_at(1) == Some(b'/') => {
                                cur.bump();
                                cur.bump();
                                break;
                            }
                            Some(_) => {
                                cur.bump();
                            }
                            None => return Err(cur.error("unterminated block comment")),
                        }
                    }
                }
                _ => break,
            }
        }

        let (line, column, offset) = (cur.line, cur.column, cur.pos);
        let Some(b) = cur.peek() else { break };

        let tok = match b {
            b'\'' => {
                cur.bump();
                let mut s = String::new();
                loop {
                    match cur.bump() {
                        Some(b'\'') => {
                            if cur.peek() == Some(b'\'') {
                                cur.bump();
                                s.push('\'');
                            } else {
                                break;
                            }
                        }
                        Some(c) => s.push(c as char),
                        None => return Err(cur.error("unterminated string literal")),
                    }
                }
                Tok::Str(s)
            }
            b'"' | b'`' => {
                let close = b;
                let quote = if b == b'"' {
                    QuoteKind::Double
                } else {
                    QuoteKind::Backtick
                };
                cur.bump();
                let mut s = String::new();
                loop {
                    match cur.bump() {
                        Some(c) if c == close => {
                            if cur.peek() == Some(close) {
                                cur.bump();
                                s.push(close as char);
                            } else {
                                break;
                            }
                        }
                        Some(c) => s.push(c as char),
                        None => return Err(cur.error("unterminated quoted identifier")),
                    }
                }
                Tok::Word {
                    text: s,
                    quote: Some(quote),
                }
            }
            b if b.is_ascii_digit()
                || (b == b'.' && cur.peek_at(1).is_some_and(|c| c.is_ascii_digit())) =>
            {
                let start = cur.pos;
                while cur.peek().is_some_and(|c| c.is_ascii_digit()) {
                    cur.bump();
                }
                if cur.peek() == Some(b'.') {
                    cur.bump();
                    while cur.peek().is_some_and(|c| c.is_ascii_digit()) {
                        cur.bump();
                    }
                }
                if cur.peek().is_some_and(|c| c == b'e' || c == b'E') {
                    let mut ahead = 1;
                    if cur.peek_at(1).is_some_and(|c| c == b'+' || c == b'-') {
                        ahead = 2;
                    }
                    if cur.peek_at(ahead).is_some_and(|c| c.is_ascii_digit()) {
                        for _ in 0..=ahead {
                            cur.bump();
                        }
                        while cur.peek().is_some_and(|c| c.is_ascii_digit()) {
                            cur.bump();
                        }
                    }
                }
                Tok::Number(text[start..cur.pos].to_string())
            }
            b if is_word_start(b) => {
                let start = cur.pos;
                while cur.peek().is_some_and(is_word_continue) {
                    cur.bump();
                }
                Tok::Word {
                    text: text[start..cur.pos].to_string(),
                    quote: None,
                }
            }
            _ => {
                let sym = match b {
                    b',' => {
                        cur.bump();
                        Sym::Comma
                    }
                    b'.' => {
                        cur.bump();
                        Sym::Dot
                    }
                    b'(' => {
                        cur.bump();
                        Sym::LParen
                    }
                    b')' => {
                        cur.bump();
                        Sym::RParen
                    }
                    b';' => {
                        cur.bump();
                        Sym::Semicolon
                    }
                    b'*' => {
                        cur.bump();
                        Sym::Star
                    }
                    b'+' => {
                        cur.bump();
                        Sym::Plus
                    }
                    b'-' => {
                        cur.bump();
                        Sym::Minus
                    }
                    b'/' => {
                        cur.bump();
                        Sym::Slash
                    }
                    b'%' => {
                        cur.bump();
                        Sym::Percent
                    }
                    b'=' => {
                        cur.bump();
                        if cur.peek() == Some(b'=') {
                            cur.bump();
                        }
                        Sym::Eq
                    }
                    b'!' => {
                        cur.bump();
                        if cur.peek() == Some(b'=') {
                            cur.bump();
                            Sym::NotEq
                        } else {
                            return Err(cur.error("unexpected character '!'"));
                        }
                    }
                    b'<' => {
                        cur.bump();
                        match cur.peek() {
                            Some(b'=') => {
                                cur.bump();
                                Sym::LtEq
                            }
                            Some(b'>') => {
                                cur.bump();
                                Sym::NotEq
                            }
                            _ => Sym::Lt,
                        }
                    }
                    b'>' => {
                        cur.bump();
                        if cur.peek() == Some(b'=') {
                            cur.bump();
                            Sym::GtEq
                        } else {
                            Sym::Gt
                        }
                    }
                    b'|' => {
                        cur.bump();
                        if cur.peek() == Some(b'|') {
                            cur.bump();
                            Sym::Concat
                        } else {
                            return Err(cur.error("unexpected character '|'"));
                        }
                    }
                    other => {
                        return Err(cur.error(format!(
                            "unexpected character '{}'",
                            (other as char).escape_default()
                        )))
                    }
                };
                Tok::Symbol(sym)
            }
        };

        out.push(Spanned {
            tok,
            line,
            column,
            offset,
        });
    }

    Ok(out)
}

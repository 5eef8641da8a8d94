//! S-expression reader with source positions.

use std::fmt;

use thiserror::Error;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Sexp {
    /// Plain or `|quoted|` symbol, or a `:keyword`.
    Symbol(String, Pos),
    Numeral(String, Pos),
    Decimal(String, Pos),
    Str(String, Pos),
    List(Vec<Sexp>, Pos),
}

impl Sexp {
    pub fn pos(&self) -> Pos {
        match self {
            Sexp::Symbol(_, p) | Sexp::Numeral(_, p) | Sexp::Decimal(_, p) | Sexp::Str(_, p) | Sexp::List(_, p) => *p,
        }
    }

    pub fn symbol(&self) -> Option<&str> {
        match self {
            Sexp::Symbol(s, _) => Some(s),
            _ => None,
        }
    }

    pub fn list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List(items, _) => Some(items),
            _ => None,
        }
    }

    /// The head symbol of a non-empty list.
    pub fn head(&self) -> Option<&str> {
        self.list().and_then(|l| l.first()).and_then(Sexp::symbol)
    }
}

impl fmt::Display for Sexp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sexp::Symbol(s, _) => cdd_chc_core::formula::write_symbol(f, s),
            Sexp::Numeral(s, _) | Sexp::Decimal(s, _) => f.write_str(s),
            Sexp::Str(s, _) => write!(f, "\"{}\"", s.replace('"', "\"\"")),
            Sexp::List(items, _) => {
                f.write_str("(")?;
                for (i, it) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{}", it)?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{pos}: {msg}")]
pub struct SyntaxError {
    pub pos: Pos,
    pub msg: String,
}

struct Reader<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    pos: Pos,
}

impl Reader<'_> {
    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.pos.line += 1;
            self.pos.col = 1;
        } else {
            self.pos.col += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        while let Some(&c) = self.chars.peek() {
            if c == ';' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else if c.is_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }

    fn err<T>(&self, pos: Pos, msg: impl Into<String>) -> Result<T, SyntaxError> {
        Err(SyntaxError { pos, msg: msg.into() })
    }

    fn read(&mut self) -> Result<Option<Sexp>, SyntaxError> {
        self.skip_trivia();
        let start = self.pos;
        let Some(&c) = self.chars.peek() else { return Ok(None) };
        match c {
            '(' => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_trivia();
                    match self.chars.peek() {
                        None => return self.err(start, "unclosed parenthesis"),
                        Some(')') => {
                            self.bump();
                            return Ok(Some(Sexp::List(items, start)));
                        }
                        Some(_) => items.push(self.read()?.expect("non-empty input")),
                    }
                }
            }
            ')' => self.err(start, "unexpected `)`"),
            '|' => {
                self.bump();
                let mut s = String::new();
                loop {
                    match self.bump() {
                        None => return self.err(start, "unterminated quoted symbol"),
                        Some('|') => return Ok(Some(Sexp::Symbol(s, start))),
                        Some(c) => s.push(c),
                    }
                }
            }
            '"' => {
                self.bump();
                let mut s = String::new();
                loop {
                    match self.bump() {
                        None => return self.err(start, "unterminated string literal"),
                        Some('"') if self.chars.peek() == Some(&'"') => {
                            self.bump();
                            s.push('"');
                        }
                        Some('"') => return Ok(Some(Sexp::Str(s, start))),
                        Some(c) => s.push(c),
                    }
                }
            }
            _ => {
                let mut s = String::new();
                while let Some(&c) = self.chars.peek() {
                    if c.is_whitespace() || "()|\";".contains(c) {
                        break;
                    }
                    s.push(c);
                    self.bump();
                }
                classify_token(s, start)
            }
        }
    }
}

fn classify_token(s: String, pos: Pos) -> Result<Option<Sexp>, SyntaxError> {
    let first = s.chars().next().unwrap_or(' ');
    if first.is_ascii_digit() {
        let is_num = s.bytes().all(|b| b.is_ascii_digit());
        let is_dec = match s.split_once('.') {
            Some((a, b)) => {
                !a.is_empty() && !b.is_empty() && a.bytes().all(|c| c.is_ascii_digit()) && b.bytes().all(|c| c.is_ascii_digit())
            }
            None => false,
        };
        return match (is_num, is_dec) {
            (true, _) => Ok(Some(Sexp::Numeral(s, pos))),
            (_, true) => Ok(Some(Sexp::Decimal(s, pos))),
            _ => Err(SyntaxError { pos, msg: format!("malformed numeral `{}`", s) }),
        };
    }
    if first == '#' {
        return Err(SyntaxError { pos, msg: format!("unsupported literal `{}`", s) });
    }
    Ok(Some(Sexp::Symbol(s, pos)))
}

/// Reads every top-level s-expression of `text`.
pub fn parse_all(text: &str) -> Result<Vec<Sexp>, SyntaxError> {
    let mut r = Reader { chars: text.chars().peekable(), pos: Pos { line: 1, col: 1 } };
    let mut out = Vec::new();
    while let Some(e) = r.read()? {
        out.push(e);
    }
    Ok(out)
}

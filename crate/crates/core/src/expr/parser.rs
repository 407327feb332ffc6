//! Recursive-descent parser for coefficient expressions.

use std::fmt;

use thiserror::Error;

use super::{Expr, Func};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{kind} at byte {offset}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParseErrorKind {
    Empty,
    UnexpectedChar(char),
    UnexpectedToken { found: String, expected: &'static str },
    UnexpectedEnd { expected: &'static str },
    BadNumber(String),
    UnknownIdentifier(String),
    Arity { func: &'static str, got: usize },
    NonConstantExponent,
    ExponentNotFinite,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::Empty => f.write_str("empty expression"),
            ParseErrorKind::UnexpectedChar(c) => write!(f, "unexpected character {c:?}"),
            ParseErrorKind::UnexpectedToken { found, expected } => {
                write!(f, "expected {expected}, found {found}")
            }
            ParseErrorKind::UnexpectedEnd { expected } => {
                write!(f, "expected {expected}, found end of input")
            }
            ParseErrorKind::BadNumber(s) => write!(f, "malformed number {s:?}"),
            ParseErrorKind::UnknownIdentifier(s) => write!(f, "unknown identifier {s:?}"),
            ParseErrorKind::Arity { func, got } => {
                write!(f, "{func} takes exactly one argument, got {got}")
            }
            ParseErrorKind::NonConstantExponent => f.write_str("exponent must be a constant"),
            ParseErrorKind::ExponentNotFinite => f.write_str("exponent is not a finite number"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier {s:?}"),
            Tok::Plus => "'+'".into(),
            Tok::Minus => "'-'".into(),
            Tok::Star => "'*'".into(),
            Tok::Slash => "'/'".into(),
            Tok::Caret => "'^'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Comma => "','".into(),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let simple = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            b',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(t) = simple {
            out.push((t, start));
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || c == b'.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text = &src[start..i];
            let v: f64 = text.parse().map_err(|_| ParseError {
                kind: ParseErrorKind::BadNumber(text.to_string()),
                offset: start,
            })?;
            out.push((Tok::Num(v), start));
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(src[start..i].to_string()), start));
            continue;
        }
        let ch = src[start..].chars().next().unwrap_or('?');
        return Err(ParseError {
            kind: ParseErrorKind::UnexpectedChar(ch),
            offset: start,
        });
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
    bindings: &'a [(&'a str, &'a Expr)],
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|(_, o)| *o).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        self.pos += 1;
        t
    }

    fn err(&self, kind: ParseErrorKind) -> ParseError {
        ParseError {
            kind,
            offset: self.offset(),
        }
    }

    fn unexpected(&self, expected: &'static str) -> ParseError {
        match self.peek() {
            Some(t) => self.err(ParseErrorKind::UnexpectedToken {
                found: t.describe(),
                expected,
            }),
            None => self.err(ParseErrorKind::UnexpectedEnd { expected }),
        }
    }

    fn expect(&mut self, tok: Tok, expected: &'static str) -> Result<(), ParseError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.unexpected(expected))
        }
    }

    // sum := term (('+' | '-') term)*
    fn sum(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    lhs = lhs + self.term()?;
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    lhs = lhs - self.term()?;
                }
                _ => return Ok(lhs),
            }
        }
    }

    // term := unary (('*' | '/') unary)*
    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    lhs = lhs * self.unary()?;
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    lhs = lhs / self.unary()?;
                }
                _ => return Ok(lhs),
            }
        }
    }

    // unary := '-' unary | '+' unary | power
    fn unary(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some(Tok::Minus) => {
                self.pos += 1;
                let inner = self.unary()?;
                Ok(match inner {
                    Expr::Num(v) => Expr::Num(-v),
                    other => -other,
                })
            }
            Some(Tok::Plus) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    // power := atom ('^' exponent)?
    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.peek() == Some(&Tok::Caret) {
            self.pos += 1;
            let p = self.exponent()?;
            Ok(base.pow(p))
        } else {
            Ok(base)
        }
    }

    // exponent := '-' exponent | '+' exponent | power, folded to a constant
    fn exponent(&mut self) -> Result<f64, ParseError> {
        let start = self.offset();
        let e = match self.peek() {
            Some(Tok::Minus) => {
                self.pos += 1;
                return Ok(-self.exponent()?);
            }
            Some(Tok::Plus) => {
                self.pos += 1;
                return self.exponent();
            }
            _ => self.power()?,
        };
        if e.contains_var() {
            return Err(ParseError {
                kind: ParseErrorKind::NonConstantExponent,
                offset: start,
            });
        }
        match e.eval(0.0) {
            Ok(v) => Ok(v),
            Err(_) => Err(ParseError {
                kind: ParseErrorKind::ExponentNotFinite,
                offset: start,
            }),
        }
    }

    // atom := number | 'x' | binding | func '(' sum ')' | '(' sum ')'
    fn atom(&mut self) -> Result<Expr, ParseError> {
        let at = self.offset();
        match self.bump() {
            Some(Tok::Num(v)) => Ok(Expr::Num(v)),
            Some(Tok::LParen) => {
                let e = self.sum()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                if name == "x" {
                    return Ok(Expr::Var);
                }
                if let Some((_, e)) = self.bindings.iter().find(|(n, _)| *n == name) {
                    return Ok((*e).clone());
                }
                if let Some(f) = Func::from_name(&name) {
                    return self.call(f);
                }
                Err(ParseError {
                    kind: ParseErrorKind::UnknownIdentifier(name),
                    offset: at,
                })
            }
            Some(_) => {
                self.pos -= 1;
                Err(self.unexpected("a number, 'x', a function or '('"))
            }
            None => Err(self.err(ParseErrorKind::UnexpectedEnd {
                expected: "a number, 'x', a function or '('",
            })),
        }
    }

    fn call(&mut self, f: Func) -> Result<Expr, ParseError> {
        self.expect(Tok::LParen, "'(' after function name")?;
        let open = self.pos;
        if self.peek() == Some(&Tok::RParen) {
            return Err(self.err(ParseErrorKind::Arity { func: f.name(), got: 0 }));
        }
        let arg = self.sum()?;
        if self.peek() == Some(&Tok::Comma) {
            let mut got = 1;
            while self.peek() == Some(&Tok::Comma) {
                self.pos += 1;
                self.sum()?;
                got += 1;
            }
            let offset = self.toks[open].1;
            return Err(ParseError {
                kind: ParseErrorKind::Arity { func: f.name(), got },
                offset,
            });
        }
        self.expect(Tok::RParen, "')'")?;
        Ok(Expr::call(f, arg))
    }
}

/// Parses an expression in `x`.
pub fn parse(src: &str) -> Result<Expr, ParseError> {
    parse_with(src, &[])
}

/// Parses an expression in which the named identifiers stand for the given
/// sub-expressions, e.g. `mu` and `sigma` inside a tilt.
pub fn parse_with(src: &str, bindings: &[(&str, &Expr)]) -> Result<Expr, ParseError> {
    let toks = lex(src)?;
    if toks.is_empty() {
        return Err(ParseError {
            kind: ParseErrorKind::Empty,
            offset: 0,
        });
    }
    let mut p = Parser {
        toks,
        pos: 0,
        end: src.len(),
        bindings,
    };
    let e = p.sum()?;
    if p.pos < p.toks.len() {
        return Err(p.unexpected("an operator or end of input"));
    }
    Ok(e)
}

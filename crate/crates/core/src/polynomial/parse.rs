//! Recursive-descent parser for polynomial expressions.
//!
//! Grammar:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary ('*' unary)*
//! unary  := ('-' | '+') unary | power
//! power  := atom ('^' integer)?
//! atom   := number | identifier | '(' expr ')'
//! ```
//!
//! Juxtaposition (`2x`, `x y`, `(x)(y)`) is rejected.

use super::{Monomial, Polynomial};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64, bool),
    Ident(String),
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn next(&mut self) -> Result<(usize, Tok)> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        if start >= bytes.len() {
            return Ok((start, Tok::End));
        }
        let c = bytes[start];
        let single = match c {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(t) = single {
            self.pos += 1;
            return Ok((start, t));
        }
        if c.is_ascii_digit() || c == b'.' {
            let mut end = start;
            let mut integral = true;
            while end < bytes.len() && bytes[end].is_ascii_digit() {
                end += 1;
            }
            if end < bytes.len() && bytes[end] == b'.' {
                integral = false;
                end += 1;
                while end < bytes.len() && bytes[end].is_ascii_digit() {
                    end += 1;
                }
            }
            if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
                let mut k = end + 1;
                if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                    k += 1;
                }
                if k < bytes.len() && bytes[k].is_ascii_digit() {
                    integral = false;
                    while k < bytes.len() && bytes[k].is_ascii_digit() {
                        k += 1;
                    }
                    end = k;
                }
            }
            let text = &self.src[start..end];
            let value: f64 = text
                .parse()
                .map_err(|_| Error::parse(start, format!("malformed number `{text}`")))?;
            self.pos = end;
            return Ok((start, Tok::Num(value, integral)));
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let mut end = start;
            while end < bytes.len() && (bytes[end].is_ascii_alphanumeric() || bytes[end] == b'_') {
                end += 1;
            }
            self.pos = end;
            return Ok((start, Tok::Ident(self.src[start..end].to_string())));
        }
        let ch = self.src[start..].chars().next().unwrap_or('?');
        Err(Error::parse(start, format!("unexpected character `{ch}`")))
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    vars: &'a [String],
    tok: Tok,
    at: usize,
}

impl<'a> Parser<'a> {
    fn bump(&mut self) -> Result<()> {
        let (at, tok) = self.lexer.next()?;
        self.at = at;
        self.tok = tok;
        Ok(())
    }

    fn expr(&mut self) -> Result<Polynomial> {
        let mut acc = self.term()?;
        loop {
            match self.tok {
                Tok::Plus => {
                    self.bump()?;
                    acc = &acc + &self.term()?;
                }
                Tok::Minus => {
                    self.bump()?;
                    acc = &acc - &self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Polynomial> {
        let mut acc = self.unary()?;
        loop {
            match self.tok {
                Tok::Star => {
                    self.bump()?;
                    acc = &acc * &self.unary()?;
                }
                Tok::Num(..) | Tok::Ident(_) | Tok::LParen => {
                    return Err(Error::parse(
                        self.at,
                        "implicit multiplication is not allowed; use `*`",
                    ))
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<Polynomial> {
        match self.tok {
            Tok::Minus => {
                self.bump()?;
                Ok(-&self.unary()?)
            }
            Tok::Plus => {
                self.bump()?;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Polynomial> {
        let base = self.atom()?;
        if self.tok != Tok::Caret {
            return Ok(base);
        }
        self.bump()?;
        match self.tok.clone() {
            Tok::Num(v, true) => {
                if v > u32::MAX as f64 {
                    return Err(Error::parse(self.at, "exponent too large"));
                }
                self.bump()?;
                Ok(base.pow(v as u32))
            }
            Tok::Num(_, false) => Err(Error::parse(
                self.at,
                "exponent must be a nonnegative integer literal",
            )),
            Tok::Minus => Err(Error::parse(self.at, "negative exponents are not allowed")),
            _ => Err(Error::parse(self.at, "expected integer exponent after `^`")),
        }
    }

    fn atom(&mut self) -> Result<Polynomial> {
        match self.tok.clone() {
            Tok::Num(v, _) => {
                self.bump()?;
                Ok(Polynomial::constant(self.vars, v))
            }
            Tok::Ident(name) => {
                let idx = self.vars.iter().position(|v| *v == name).ok_or_else(|| {
                    Error::parse(self.at, format!("unknown identifier `{name}`"))
                })?;
                self.bump()?;
                Ok(Polynomial::monomial(self.vars, Monomial::var(idx), 1.0))
            }
            Tok::LParen => {
                let open = self.at;
                self.bump()?;
                let inner = self.expr()?;
                if self.tok != Tok::RParen {
                    return Err(Error::parse(
                        self.at,
                        format!("expected `)` to close `(` at byte {open}"),
                    ));
                }
                self.bump()?;
                Ok(inner)
            }
            Tok::End => Err(Error::parse(self.at, "unexpected end of input")),
            other => Err(Error::parse(self.at, format!("unexpected token {other:?}"))),
        }
    }
}

/// Parses `text` as a polynomial over `vars`, expanding and merging terms.
pub fn parse(text: &str, vars: &[String]) -> Result<Polynomial> {
    let mut p = Parser {
        lexer: Lexer { src: text, pos: 0 },
        vars,
        tok: Tok::End,
        at: 0,
    };
    p.bump()?;
    let out = p.expr()?;
    if p.tok != Tok::End {
        return Err(Error::parse(p.at, "unexpected trailing input"));
    }
    Ok(out)
}

//! Recursive-descent parser for the expression grammar.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := ('-' | '+') unary | power
//! power  := base ('^' '-'? integer)?
//! base   := number | ref | func '(' expr ')' | '(' expr ')'
//! ref    := ident | field '[' int (',' int)* ']' | 'p.' field '[' … ']' | 'p0'
//!         | ('d_' | 'F_' | 'G_') basename '(' ref ')'
//! ```

use num_bigint::BigInt;
use num_traits::{One, Zero};
use thiserror::Error;

use super::expr::{Expr, Func, Q};
use super::symbol::{Names, Symbol};
use crate::multiindex::MultiIndex;

/// The identifiers an expression may refer to.
#[derive(Debug, Clone, Default)]
pub struct Scope {
    /// Base coordinate names, in order.
    pub base: Vec<String>,
    /// Field names, in order.
    pub fields: Vec<String>,
    /// Parameter names.
    pub params: Vec<String>,
    /// Highest admissible jet order.
    pub max_order: u32,
}

impl Names for Scope {
    fn base_name(&self, i: usize) -> String {
        self.base.get(i).cloned().unwrap_or_else(|| format!("x{}", i + 1))
    }

    fn field_name(&self, a: usize) -> String {
        self.fields.get(a).cloned().unwrap_or_else(|| format!("u{}", a + 1))
    }
}

/// Parse failures, each carrying the byte offset where it was detected.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { offset: usize, name: String },
    #[error("multi-index at byte {offset} has {found} entries, expected {expected}")]
    Arity { offset: usize, expected: usize, found: usize },
    #[error("jet order {order} at byte {offset} exceeds the chart order {max}")]
    OrderTooHigh { offset: usize, order: u32, max: u32 },
}

impl ParseError {
    /// Byte offset of the failure.
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::UnknownIdentifier { offset, .. }
            | ParseError::Arity { offset, .. }
            | ParseError::OrderTooHigh { offset, .. } => *offset,
        }
    }
}

/// Parses `text` against the identifiers in `scope`.
pub fn parse(text: &str, scope: &Scope) -> Result<Expr, ParseError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0, scope };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.syntax("unexpected trailing input"));
    }
    Ok(e)
}

/// Parses a single symbol reference such as `u[1,0]`, `p.u[2,0]` or `d_x(u)`.
pub fn parse_symbol(text: &str, scope: &Scope) -> Result<Symbol, ParseError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0, scope };
    p.skip_ws();
    let start = p.pos;
    let name = p.ident().ok_or_else(|| p.syntax("expected identifier"))?;
    let s = p.reference(&name, start)?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.syntax("unexpected trailing input"));
    }
    Ok(s)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    scope: &'a Scope,
}

impl<'a> Parser<'a> {
    fn syntax(&self, message: &str) -> ParseError {
        ParseError::Syntax { offset: self.pos, message: message.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.syntax(&format!("expected `{}`", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut terms = vec![self.term()?];
        loop {
            if self.eat(b'+') {
                terms.push(self.term()?);
            } else if self.eat(b'-') {
                terms.push(-self.term()?);
            } else {
                break;
            }
        }
        Ok(Expr::sum(terms))
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.unary()?;
        loop {
            if self.eat(b'*') {
                acc = acc * self.unary()?;
            } else if self.eat(b'/') {
                acc = acc / self.unary()?;
            } else {
                break;
            }
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat(b'-') {
            return Ok(-self.unary()?);
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.base()?;
        if self.eat(b'^') {
            let negative = self.eat(b'-');
            self.skip_ws();
            let start = self.pos;
            let digits = self.digits();
            if digits.is_empty() {
                return Err(self.syntax("expected integer exponent"));
            }
            let mut k: i64 = digits
                .parse()
                .map_err(|_| ParseError::Syntax { offset: start, message: "exponent too large".into() })?;
            if negative {
                k = -k;
            }
            return Ok(base.pow(k));
        }
        Ok(base)
    }

    fn digits(&mut self) -> String {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let int_part = self.digits();
        let mut value = Q::from_integer(int_part.parse::<BigInt>().unwrap_or_else(|_| BigInt::zero()));
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            self.pos += 1;
            let frac = self.digits();
            if frac.is_empty() && int_part.is_empty() {
                return Err(self.syntax("malformed number"));
            }
            let mut scale = BigInt::one();
            for _ in 0..frac.len() {
                scale *= 10;
            }
            let frac_val = if frac.is_empty() { BigInt::zero() } else { frac.parse::<BigInt>().unwrap() };
            value += Q::new(frac_val, scale);
        }
        Ok(Expr::Num(value))
    }

    fn ident(&mut self) -> Option<String> {
        let start = self.pos;
        match self.src.get(self.pos) {
            Some(c) if c.is_ascii_alphabetic() || *c == b'_' => self.pos += 1,
            _ => return None,
        }
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        Some(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                let name = self.ident().unwrap();
                if let Some(f) = Func::from_name(&name) {
                    if !self.scope.params.contains(&name) {
                        self.expect(b'(')?;
                        let arg = self.expr()?;
                        self.expect(b')')?;
                        return Ok(Expr::func(f, arg));
                    }
                }
                Ok(Expr::Sym(self.reference(&name, start)?))
            }
            Some(_) => Err(self.syntax("unexpected character")),
            None => Err(self.syntax("unexpected end of input")),
        }
    }

    fn reference(&mut self, name: &str, start: usize) -> Result<Symbol, ParseError> {
        if let Some(i) = self.scope.base.iter().position(|b| b == name) {
            return Ok(Symbol::Base(i));
        }
        if self.scope.params.iter().any(|p| p == name) {
            return Ok(Symbol::param(name));
        }
        if let Some(a) = self.scope.fields.iter().position(|f| f == name) {
            let index = if self.src.get(self.pos) == Some(&b'[') {
                self.multi_index()?
            } else {
                MultiIndex::zero(self.scope.base.len())
            };
            if index.length() > self.scope.max_order {
                return Err(ParseError::OrderTooHigh {
                    offset: start,
                    order: index.length(),
                    max: self.scope.max_order,
                });
            }
            return Ok(Symbol::jet(a, index));
        }
        if name == "p0" {
            return Ok(Symbol::ExtMomentum);
        }
        if name == "p" && self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            let fstart = self.pos;
            let field = self.ident().ok_or_else(|| self.syntax("expected field name after `p.`"))?;
            let a = self
                .scope
                .fields
                .iter()
                .position(|f| *f == field)
                .ok_or(ParseError::UnknownIdentifier { offset: fstart, name: field.clone() })?;
            let istart = self.pos;
            let index = self.multi_index()?;
            if !(1..=2).contains(&index.length()) {
                return Err(ParseError::Syntax {
                    offset: istart,
                    message: "momentum multi-index must have length 1 or 2".into(),
                });
            }
            return Ok(Symbol::momentum(a, index));
        }
        for (prefix, kind) in [("d_", 0u8), ("F_", 1), ("G_", 2)] {
            if let Some(dir_name) = name.strip_prefix(prefix) {
                if let Some(dir) = self.scope.base.iter().position(|b| b == dir_name) {
                    self.expect(b'(')?;
                    self.skip_ws();
                    let inner_start = self.pos;
                    let inner_name = self.ident().ok_or_else(|| self.syntax("expected symbol"))?;
                    let inner = self.reference(&inner_name, inner_start)?;
                    self.expect(b')')?;
                    return match kind {
                        0 => Ok(inner.deriv(dir)),
                        1 if matches!(inner, Symbol::Jet { .. }) => Ok(inner.flow(dir)),
                        2 if matches!(inner, Symbol::Momentum { .. } | Symbol::ExtMomentum) => Ok(inner.flow(dir)),
                        _ => Err(ParseError::Syntax {
                            offset: inner_start,
                            message: "F_ takes a jet coordinate and G_ a momentum".into(),
                        }),
                    };
                }
            }
        }
        Err(ParseError::UnknownIdentifier { offset: start, name: name.to_string() })
    }

    fn multi_index(&mut self) -> Result<MultiIndex, ParseError> {
        let start = self.pos;
        self.expect(b'[')?;
        let mut entries = Vec::new();
        loop {
            self.skip_ws();
            let d = self.digits();
            if d.is_empty() {
                return Err(self.syntax("expected nonnegative integer in multi-index"));
            }
            entries.push(d.parse::<u32>().map_err(|_| self.syntax("multi-index entry too large"))?);
            if self.eat(b',') {
                continue;
            }
            self.expect(b']')?;
            break;
        }
        if entries.len() != self.scope.base.len() {
            return Err(ParseError::Arity {
                offset: start,
                expected: self.scope.base.len(),
                found: entries.len(),
            });
        }
        Ok(MultiIndex::new(entries))
    }
}

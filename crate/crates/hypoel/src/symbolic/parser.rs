//! Recursive-descent parser for the coefficient expression grammar.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := factor (('*' | '/') factor)*
//! factor  := '-' factor | primary ('^' integer)?
//! primary := number | 'x'<digits> | 't' | 'pi'
//!          | ('sin' | 'cos' | 'exp') '(' expr ')'
//!          | '(' expr ')'
//! ```
//!
//! Numbers are decimal literals with optional fraction and exponent and are
//! converted to exact rationals, so printed expressions parse back to the
//! same canonical form. Exponents after `^` must be (possibly negative)
//! integers. Variable indices are validated against the declared dimension.

use num::{pow::Pow, BigInt, BigRational, Zero};
use std::fmt;
use thiserror::Error;

use super::expr::Expr;

/// Parse failure, carrying the byte offset into the input.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    /// Malformed syntax; the message says what was expected.
    Syntax(String),
    /// An identifier outside the grammar.
    UnknownIdentifier(String),
    /// `x{index}` with an index outside `1..=dimension`.
    VarIndexOutOfRange { index: usize, dimension: usize },
    /// A literal zero denominator such as `1/0`.
    DivisionByZero,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ParseErrorKind::Syntax(msg) => {
                write!(f, "syntax error at offset {}: {msg}", self.offset)
            }
            ParseErrorKind::UnknownIdentifier(name) => {
                write!(f, "unknown identifier `{name}` at offset {}", self.offset)
            }
            ParseErrorKind::VarIndexOutOfRange { index, dimension } => write!(
                f,
                "variable index {index} out of range for dimension {dimension} at offset {}",
                self.offset
            ),
            ParseErrorKind::DivisionByZero => {
                write!(f, "division by zero at offset {}", self.offset)
            }
        }
    }
}

/// Parse `text` into a canonical [`Expr`] over variables `x1..x{dimension}`.
pub fn parse_expr(text: &str, dimension: usize) -> Result<Expr, ParseError> {
    let mut p = Parser {
        bytes: text.as_bytes(),
        pos: 0,
        dimension,
    };
    p.skip_ws();
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.bytes.len() {
        return Err(p.err_syntax("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
    dimension: usize,
}

impl<'a> Parser<'a> {
    fn err_syntax(&self, msg: &str) -> ParseError {
        ParseError {
            kind: ParseErrorKind::Syntax(msg.to_string()),
            offset: self.pos,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn eat(&mut self, b: u8) -> bool {
        if self.peek() == Some(b) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, b: u8, what: &str) -> Result<(), ParseError> {
        if self.eat(b) {
            Ok(())
        } else {
            Err(self.err_syntax(what))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.term()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    self.skip_ws();
                    let rhs = self.term()?;
                    acc = acc.add(&rhs);
                }
                Some(b'-') => {
                    self.pos += 1;
                    self.skip_ws();
                    let rhs = self.term()?;
                    acc = acc.sub(&rhs);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.factor()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    self.skip_ws();
                    let rhs = self.factor()?;
                    acc = acc.mul(&rhs);
                }
                Some(b'/') => {
                    let at = self.pos;
                    self.pos += 1;
                    self.skip_ws();
                    let rhs = self.factor()?;
                    acc = acc.checked_div(&rhs).ok_or(ParseError {
                        kind: ParseErrorKind::DivisionByZero,
                        offset: at,
                    })?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        self.skip_ws();
        if self.eat(b'-') {
            self.skip_ws();
            return Ok(self.factor()?.neg());
        }
        let base = self.primary()?;
        self.skip_ws();
        if self.eat(b'^') {
            let at = self.pos;
            self.skip_ws();
            let n = self.integer()?;
            return base.checked_powi(n).ok_or(ParseError {
                kind: ParseErrorKind::DivisionByZero,
                offset: at,
            });
        }
        Ok(base)
    }

    fn integer(&mut self) -> Result<i32, ParseError> {
        let neg = self.eat(b'-');
        let start = self.pos;
        while self.peek().is_some_and(|b| b.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.err_syntax("expected integer exponent"));
        }
        if self.peek() == Some(b'.') {
            return Err(self.err_syntax("exponent must be an integer"));
        }
        let digits = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
        let n: i32 = digits
            .parse()
            .map_err(|_| self.err_syntax("integer exponent out of range"))?;
        Ok(if neg { -n } else { n })
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        self.skip_ws();
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.skip_ws();
                self.expect(b')', "expected `)`")?;
                Ok(e)
            }
            Some(b) if b.is_ascii_digit() || b == b'.' => self.number(),
            Some(b) if b.is_ascii_alphabetic() => self.identifier(),
            _ => Err(self.err_syntax("expected expression")),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let mut int_digits = String::new();
        let mut frac_digits = String::new();
        while self.peek().is_some_and(|b| b.is_ascii_digit()) {
            int_digits.push(self.bytes[self.pos] as char);
            self.pos += 1;
        }
        if self.eat(b'.') {
            while self.peek().is_some_and(|b| b.is_ascii_digit()) {
                frac_digits.push(self.bytes[self.pos] as char);
                self.pos += 1;
            }
        }
        if int_digits.is_empty() && frac_digits.is_empty() {
            self.pos = start;
            return Err(self.err_syntax("expected number"));
        }
        let mut exponent: i64 = 0;
        if self.peek().is_some_and(|b| b == b'e' || b == b'E') {
            let save = self.pos;
            self.pos += 1;
            let neg = self.eat(b'-') || {
                self.eat(b'+');
                false
            };
            let estart = self.pos;
            while self.peek().is_some_and(|b| b.is_ascii_digit()) {
                self.pos += 1;
            }
            if self.pos == estart {
                // Not an exponent after all (e.g. `2*exp(t)` never reaches
                // here, but be conservative and back off).
                self.pos = save;
            } else {
                let digits = std::str::from_utf8(&self.bytes[estart..self.pos]).unwrap();
                let e: i64 = digits
                    .parse()
                    .map_err(|_| self.err_syntax("exponent out of range"))?;
                exponent = if neg { -e } else { e };
            }
        }
        // Exact decimal -> rational conversion.
        let mantissa: BigInt = format!("{int_digits}{frac_digits}")
            .parse()
            .unwrap_or_else(|_| BigInt::zero());
        let mut value = BigRational::from(mantissa);
        let scale = frac_digits.len() as i64 - exponent;
        let ten = BigInt::from(10u8);
        if scale > 0 {
            value /= BigRational::from(Pow::pow(ten, scale as u64));
        } else if scale < 0 {
            value *= BigRational::from(Pow::pow(ten, (-scale) as u64));
        }
        Ok(Expr::from_rational(value))
    }

    fn identifier(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self
            .peek()
            .is_some_and(|b| b.is_ascii_alphanumeric() || b == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
        match name {
            "t" => Ok(Expr::time()),
            "pi" => Ok(Expr::constant(std::f64::consts::PI)),
            "sin" | "cos" | "exp" => {
                self.skip_ws();
                self.expect(b'(', "expected `(` after function name")?;
                let arg = self.expr()?;
                self.skip_ws();
                self.expect(b')', "expected `)`")?;
                Ok(match name {
                    "sin" => arg.sin(),
                    "cos" => arg.cos(),
                    _ => arg.exp(),
                })
            }
            _ if name.starts_with('x') && name.len() > 1 => {
                let idx: usize = name[1..].parse().map_err(|_| ParseError {
                    kind: ParseErrorKind::UnknownIdentifier(name.to_string()),
                    offset: start,
                })?;
                if idx == 0 || idx > self.dimension {
                    return Err(ParseError {
                        kind: ParseErrorKind::VarIndexOutOfRange {
                            index: idx,
                            dimension: self.dimension,
                        },
                        offset: start,
                    });
                }
                Ok(Expr::var(idx))
            }
            _ => Err(ParseError {
                kind: ParseErrorKind::UnknownIdentifier(name.to_string()),
                offset: start,
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_basic_forms() {
        let e = parse_expr("sin(x1)", 2).unwrap();
        assert_eq!(e, Expr::var(1).sin());

        let e = parse_expr("x1*x2 + 2", 2).unwrap();
        let want = Expr::var(1).mul(&Expr::var(2)).add(&Expr::constant(2.0));
        assert_eq!(e, want);
    }

    #[test]
    fn syntax_error_carries_offset() {
        let err = parse_expr("sin(", 1).unwrap_err();
        assert_eq!(err.offset, 4);
        assert!(matches!(err.kind, ParseErrorKind::Syntax(_)));
    }

    #[test]
    fn unknown_identifier_rejected() {
        let err = parse_expr("foo(x1)", 1).unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::UnknownIdentifier(_)));
    }

    #[test]
    fn var_index_out_of_range() {
        let err = parse_expr("x3", 2).unwrap_err();
        assert!(matches!(
            err.kind,
            ParseErrorKind::VarIndexOutOfRange {
                index: 3,
                dimension: 2
            }
        ));
    }

    #[test]
    fn exact_decimal_literals() {
        // 0.1 parses to exactly 1/10, not the f64 rounding of 0.1.
        let e = parse_expr("0.1", 1).unwrap();
        let ten = parse_expr("10", 1).unwrap();
        assert_eq!(e.mul(&ten), Expr::one());
    }

    #[test]
    fn power_and_division() {
        let e = parse_expr("x1^2 / x1", 1).unwrap();
        assert_eq!(e, Expr::var(1));
        let e = parse_expr("(x1 + 1)^-1", 1).unwrap();
        let v = e.eval(&[3.0], 0.0);
        assert!((v - 0.25).abs() < 1e-15);
    }

    #[test]
    fn division_by_zero_literal() {
        let err = parse_expr("1/0", 1).unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::DivisionByZero));
    }

    #[test]
    fn display_round_trip() {
        for src in [
            "sin(x1)*cos(x2) - 1/2*x1^3",
            "exp(t)*x1 + 2.5",
            "(x1 + x2)^-2",
            "-sin(x1)^2*x2 + 1/3",
            "x1^-1 + t^2",
        ] {
            let e = parse_expr(src, 2).unwrap();
            let printed = e.to_string();
            let back = parse_expr(&printed, 2).unwrap();
            assert_eq!(e, back, "round trip failed: {src} -> {printed}");
        }
    }
}

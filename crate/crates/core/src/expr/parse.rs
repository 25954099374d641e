//! Recursive-descent parser.
//!
//! Grammar (EBNF):
//!
//! ```text
//! expr    = [ "-" ] term { ("+" | "-") term } ;
//! term    = factor { ("*" | "/") factor } ;
//! factor  = "-" factor | power ;
//! power   = primary [ "^" factor ] ;            (* right associative *)
//! primary = number | call | ident | "(" expr ")" ;
//! call    = ("exp" | "log" | "ln" | "sqrt") "(" expr ")" ;
//! ident   = letter { letter | digit | "_" } { "'" } ;
//! number  = digit { digit } [ "." digit { digit } ] [ ("e" | "E") [ "+" | "-" ] digit { digit } ] ;
//! ```
//!
//! A leading minus negates the whole first term, so `-(a+A)*t` reads as
//! `-((a+A)*t)`. Decimal literals are converted to exact rationals. A trailing
//! apostrophe marks a time derivative (`r2'` is the velocity of `r2`).

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use super::{Expr, Node};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown function `{name}` at position {pos}")]
    UnknownFunction { name: String, pos: usize },
}

pub fn parse(text: &str) -> Result<Expr, ParseError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0 };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.err(format!("unexpected `{}`", p.src[p.pos] as char)));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, msg: String) -> ParseError {
        ParseError::Syntax { pos: self.pos, msg }
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

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let negate = self.eat(b'-');
        let first = self.term()?;
        let mut terms = vec![if negate { -first } else { first }];
        loop {
            if self.eat(b'+') {
                terms.push(self.term()?);
            } else if self.eat(b'-') {
                terms.push(-self.term()?);
            } else {
                break;
            }
        }
        Ok(Expr::add(terms))
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut factors = vec![self.factor()?];
        loop {
            if self.eat(b'*') {
                factors.push(self.factor()?);
            } else if self.eat(b'/') {
                factors.push(self.factor()?.recip());
            } else {
                break;
            }
        }
        Ok(Expr::mul(factors))
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if self.eat(b'-') {
            return Ok(-self.factor()?);
        }
        let base = self.primary()?;
        if self.eat(b'^') {
            let e = self.factor()?;
            return Ok(base.pow(e));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            None => Err(self.err("unexpected end of input".into())),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.err("expected `)`".into()));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident_or_call(),
            Some(c) => Err(self.err(format!("unexpected `{}`", c as char))),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            std::str::from_utf8(&p.src[s..p.pos]).unwrap().to_string()
        };
        let int_part = digits(self);
        let mut frac_part = String::new();
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            frac_part = digits(self);
        }
        if int_part.is_empty() && frac_part.is_empty() {
            self.pos = start;
            return Err(self.err("malformed number".into()));
        }
        let mut exponent: i64 = 0;
        if matches!(self.src.get(self.pos), Some(b'e') | Some(b'E')) {
            let save = self.pos;
            self.pos += 1;
            let mut sign = 1;
            if self.src.get(self.pos) == Some(&b'-') {
                sign = -1;
                self.pos += 1;
            } else if self.src.get(self.pos) == Some(&b'+') {
                self.pos += 1;
            }
            let e = digits(self);
            if e.is_empty() {
                // Not an exponent after all (e.g. `2exp`): leave it for the caller.
                self.pos = save;
            } else {
                exponent = sign * e.parse::<i64>().map_err(|_| self.err("exponent too large".into()))?;
            }
        }
        let mantissa: BigInt = format!("{int_part}{frac_part}").parse().unwrap_or_else(|_| BigInt::zero());
        let scale = exponent - frac_part.len() as i64;
        let ten = BigRational::from_integer(BigInt::from(10));
        let factor = if scale >= 0 {
            num_traits::pow(ten, scale as usize)
        } else {
            num_traits::pow(ten, (-scale) as usize).recip()
        };
        Ok(Expr::rational(BigRational::from_integer(mantissa) * factor))
    }

    fn ident_or_call(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
            self.pos += 1;
        }
        while self.src.get(self.pos) == Some(&b'\'') {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap().to_string();
        if self.peek() == Some(b'(') {
            self.pos += 1;
            let arg = self.expr()?;
            if !self.eat(b')') {
                return Err(self.err("expected `)`".into()));
            }
            return match name.as_str() {
                "exp" => Ok(arg.exp()),
                "log" | "ln" => Ok(arg.log()),
                "sqrt" => Ok(arg.pow(Expr::rational(BigRational::new(BigInt::one(), BigInt::from(2))))),
                _ => Err(ParseError::UnknownFunction { name, pos: start }),
            };
        }
        Ok(Expr::new(Node::Sym(name.into())))
    }
}

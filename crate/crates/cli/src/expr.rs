//! Exact arithmetic on parameter expressions such as `2*k+1`, `-a` or `1/2`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

pub type Rat = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExprError {
    #[error("unexpected `{found}` at offset {at} in `{text}`")]
    Unexpected { text: String, at: usize, found: String },
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
    #[error("division by zero in `{0}`")]
    DivisionByZero(String),
    #[error("exponent in `{0}` must be a small integer")]
    BadExponent(String),
    #[error("`{text}` evaluates to {value}, expected an integer")]
    NotInteger { text: String, value: String },
}

pub type Params = BTreeMap<String, Rat>;

struct Parser<'a> {
    text: &'a str,
    bytes: &'a [u8],
    pos: usize,
    params: &'a Params,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn unexpected(&self) -> ExprError {
        let found = self.text[self.pos..].chars().next().map_or("end of input".to_string(), |c| c.to_string());
        ExprError::Unexpected {
            text: self.text.to_string(),
            at: self.pos,
            found,
        }
    }

    fn sum(&mut self) -> Result<Rat, ExprError> {
        let mut acc = self.product()?;
        while let Some(op @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.product()?;
            acc = if op == b'+' { acc + rhs } else { acc - rhs };
        }
        Ok(acc)
    }

    fn product(&mut self) -> Result<Rat, ExprError> {
        let mut acc = self.unary()?;
        while let Some(op @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let rhs = self.unary()?;
            if op == b'*' {
                acc *= rhs;
            } else {
                if rhs.is_zero() {
                    return Err(ExprError::DivisionByZero(self.text.to_string()));
                }
                acc /= rhs;
            }
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Rat, ExprError> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(-self.unary()?)
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    // `-x^2` is `-(x^2)`; the exponent itself may carry a sign.
    fn power(&mut self) -> Result<Rat, ExprError> {
        let base = self.atom()?;
        if self.peek() != Some(b'^') {
            return Ok(base);
        }
        self.pos += 1;
        let e = self.unary()?;
        let e = e
            .is_integer()
            .then(|| e.to_integer().to_i32())
            .flatten()
            .filter(|e| e.abs() <= 64)
            .ok_or_else(|| ExprError::BadExponent(self.text.to_string()))?;
        if e < 0 && base.is_zero() {
            return Err(ExprError::DivisionByZero(self.text.to_string()));
        }
        let p = num_traits::pow(base, e.unsigned_abs() as usize);
        Ok(if e < 0 { Rat::one() / p } else { p })
    }

    fn atom(&mut self) -> Result<Rat, ExprError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let v = self.sum()?;
                if self.peek() != Some(b')') {
                    return Err(self.unexpected());
                }
                self.pos += 1;
                Ok(v)
            }
            Some(c) if c.is_ascii_digit() => {
                let start = self.pos;
                while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                let n: BigInt = self.text[start..self.pos].parse().expect("digits");
                Ok(Rat::from_integer(n))
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.bytes.len() && (self.bytes[self.pos].is_ascii_alphanumeric() || self.bytes[self.pos] == b'_') {
                    self.pos += 1;
                }
                let name = &self.text[start..self.pos];
                self.params
                    .get(name)
                    .cloned()
                    .ok_or_else(|| ExprError::UnknownParameter(name.to_string()))
            }
            _ => Err(self.unexpected()),
        }
    }
}

pub fn eval(text: &str, params: &Params) -> Result<Rat, ExprError> {
    let mut p = Parser {
        text,
        bytes: text.as_bytes(),
        pos: 0,
        params,
    };
    let v = p.sum()?;
    if p.peek().is_some() {
        return Err(p.unexpected());
    }
    Ok(v)
}

pub fn eval_integer(text: &str, params: &Params) -> Result<BigInt, ExprError> {
    let v = eval(text, params)?;
    if !v.is_integer() {
        return Err(ExprError::NotInteger {
            text: text.to_string(),
            value: format_rat(&v),
        });
    }
    Ok(v.to_integer())
}

/// `p/q` in lowest terms, or just `p`.
pub fn format_rat(r: &Rat) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn is_small_integer(r: &Rat) -> Option<i64> {
    if r.is_integer() {
        r.to_integer().to_i64().filter(|v| v.abs() < (1 << 53))
    } else {
        None
    }
}

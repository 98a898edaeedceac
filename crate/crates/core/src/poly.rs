//! Integer polynomials in the variables `p` and `m`.
//!
//! The closed-form coefficient tables ship as plain-text expressions (see
//! `data/`), kept verbatim in their printed grouping so they can be
//! reviewed term by term. This module parses those expressions and
//! evaluates them exactly.

use std::collections::BTreeMap;
use std::fmt;

use num::bigint::BigInt;
use num::{One, Zero};

use crate::{Error, Result};

/// Sparse polynomial over `Z[p, m]`, keyed by `(m_degree, p_degree)`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Poly {
    terms: BTreeMap<(u32, u32), BigInt>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn constant(c: BigInt) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert((0, 0), c);
        }
        Poly { terms }
    }

    fn monomial(m_deg: u32, p_deg: u32) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert((m_deg, p_deg), BigInt::one());
        Poly { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn insert(&mut self, key: (u32, u32), coeff: BigInt) {
        let entry = self.terms.entry(key).or_insert_with(BigInt::zero);
        *entry += coeff;
        if entry.is_zero() {
            self.terms.remove(&key);
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.insert(*k, c.clone());
        }
        out
    }

    pub fn neg(&self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(k, c)| (*k, -c)).collect(),
        }
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for ((ma, pa), ca) in &self.terms {
            for ((mb, pb), cb) in &other.terms {
                out.insert((ma + mb, pa + pb), ca * cb);
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut out = Poly::constant(BigInt::one());
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }

    /// Exact value at integer `(p, m)`.
    pub fn eval(&self, p: &BigInt, m: &BigInt) -> BigInt {
        let mut acc = BigInt::zero();
        for ((m_deg, p_deg), c) in &self.terms {
            acc += c * p.pow(*p_deg) * m.pow(*m_deg);
        }
        acc
    }

    /// Parse an expression such as `m^4*p^2*(2+p+p^2) - 2*m^3*p*(24+10*p)`.
    pub fn parse(src: &str) -> Result<Poly> {
        let mut parser = Parser {
            src: src.as_bytes(),
            pos: 0,
        };
        let poly = parser.expr()?;
        parser.skip_ws();
        if parser.pos != parser.src.len() {
            return Err(Error::parse(parser.pos, "unexpected trailing input"));
        }
        Ok(poly)
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for ((m_deg, p_deg), c) in self.terms.iter().rev() {
            if first {
                write!(f, "{c}")?;
                first = false;
            } else if c.sign() == num::bigint::Sign::Minus {
                write!(f, " - {}", -c)?;
            } else {
                write!(f, " + {c}")?;
            }
            if *m_deg > 0 {
                write!(f, "*m^{m_deg}")?;
            }
            if *p_deg > 0 {
                write!(f, "*p^{p_deg}")?;
            }
        }
        Ok(())
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Poly> {
        let mut acc = self.term()?;
        while let Some(op @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            acc = if op == b'+' { acc.add(&rhs) } else { acc.sub(&rhs) };
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Poly> {
        let mut acc = self.unary()?;
        while let Some(b'*') = self.peek() {
            self.pos += 1;
            acc = acc.mul(&self.unary()?);
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Poly> {
        if let Some(b'-') = self.peek() {
            self.pos += 1;
            return Ok(self.unary()?.neg());
        }
        self.factor()
    }

    fn factor(&mut self) -> Result<Poly> {
        let base = self.atom()?;
        if let Some(b'^') = self.peek() {
            self.pos += 1;
            let e = self.uint()?;
            return Ok(base.pow(e));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Poly> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                match self.peek() {
                    Some(b')') => {
                        self.pos += 1;
                        Ok(inner)
                    }
                    _ => Err(Error::parse(self.pos, "expected ')'")),
                }
            }
            Some(b'p') => {
                self.pos += 1;
                Ok(Poly::monomial(0, 1))
            }
            Some(b'm') => {
                self.pos += 1;
                Ok(Poly::monomial(1, 0))
            }
            Some(c) if c.is_ascii_digit() => {
                let v = self.uint()?;
                Ok(Poly::constant(BigInt::from(v)))
            }
            _ => Err(Error::parse(self.pos, "expected number, 'p', 'm' or '('")),
        }
    }

    fn uint(&mut self) -> Result<u32> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::parse(start, "expected an integer"));
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .expect("digits are ascii")
            .parse()
            .map_err(|_| Error::parse(start, "integer out of range"))
    }
}

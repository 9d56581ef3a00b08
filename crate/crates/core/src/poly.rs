//! Real polynomials with a small expression parser.
//!
//! The parser accepts sums and products of `x`, decimal or rational
//! constants, parentheses and non-negative integer powers:
//! `x-0.5`, `x(x-1)`, `(x-1/3)^2`, `2x^3 - x + 1`.

use serde::{Deserialize, Serialize};

use crate::error::{GaborError, Result};

/// Coefficients in increasing degree: `c[0] + c[1] x + …`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Poly(pub Vec<f64>);

impl Poly {
    pub fn new(coeffs: Vec<f64>) -> Self {
        let mut p = Poly(coeffs);
        p.trim();
        p
    }

    pub fn constant(c: f64) -> Self {
        Poly::new(vec![c])
    }

    pub fn x() -> Self {
        Poly(vec![0.0, 1.0])
    }

    fn trim(&mut self) {
        while self.0.len() > 1 && self.0.last() == Some(&0.0) {
            self.0.pop();
        }
        if self.0.is_empty() {
            self.0.push(0.0);
        }
    }

    pub fn degree(&self) -> usize {
        if self.0.iter().all(|&c| c == 0.0) {
            0
        } else {
            self.0.len() - 1
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.0.len().max(other.0.len());
        let c = (0..n)
            .map(|i| self.0.get(i).copied().unwrap_or(0.0) + other.0.get(i).copied().unwrap_or(0.0))
            .collect();
        Poly::new(c)
    }

    pub fn neg(&self) -> Poly {
        Poly(self.0.iter().map(|c| -c).collect())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut c = vec![0.0; self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Poly::new(c)
    }

    pub fn pow(&self, e: u32) -> Poly {
        (0..e).fold(Poly::constant(1.0), |acc, _| acc.mul(self))
    }

    pub fn parse(src: &str) -> Result<Poly> {
        let mut parser = Parser { chars: src.chars().filter(|c| !c.is_whitespace()).collect(), pos: 0 };
        let p = parser.sum()?;
        if parser.pos != parser.chars.len() {
            return Err(parser.error("unexpected trailing input"));
        }
        Ok(p)
    }
}

impl std::str::FromStr for Poly {
    type Err = GaborError;
    fn from_str(s: &str) -> Result<Self> {
        Poly::parse(s)
    }
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn error(&self, msg: &str) -> GaborError {
        let src: String = self.chars.iter().collect();
        GaborError::Parse(format!("{msg} at position {} in `{src}`", self.pos))
    }

    fn sum(&mut self) -> Result<Poly> {
        let mut acc = match self.peek() {
            Some('-') => {
                self.pos += 1;
                self.product()?.neg()
            }
            Some('+') => {
                self.pos += 1;
                self.product()?
            }
            _ => self.product()?,
        };
        while let Some(c) = self.peek() {
            match c {
                '+' => {
                    self.pos += 1;
                    acc = acc.add(&self.product()?);
                }
                '-' => {
                    self.pos += 1;
                    acc = acc.add(&self.product()?.neg());
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    // Juxtaposition is multiplication: `2x`, `x(x-1)`.
    fn product(&mut self) -> Result<Poly> {
        let mut acc = self.power()?;
        loop {
            match self.peek() {
                Some('*') => {
                    self.pos += 1;
                    acc = acc.mul(&self.power()?);
                }
                Some('/') => {
                    self.pos += 1;
                    let d = self.power()?;
                    if d.degree() != 0 || d.0[0] == 0.0 {
                        return Err(self.error("division only by nonzero constants"));
                    }
                    acc = acc.mul(&Poly::constant(1.0 / d.0[0]));
                }
                Some(c) if c == 'x' || c == '(' || c.is_ascii_digit() || c == '.' => {
                    acc = acc.mul(&self.power()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn power(&mut self) -> Result<Poly> {
        let base = self.atom()?;
        if self.peek() == Some('^') {
            self.pos += 1;
            let start = self.pos;
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.pos += 1;
            }
            let digits: String = self.chars[start..self.pos].iter().collect();
            let e: u32 = digits.parse().map_err(|_| self.error("expected integer exponent"))?;
            return Ok(base.pow(e));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Poly> {
        match self.peek() {
            Some('x') => {
                self.pos += 1;
                Ok(Poly::x())
            }
            Some('(') => {
                self.pos += 1;
                let inner = self.sum()?;
                if self.peek() != Some(')') {
                    return Err(self.error("expected `)`"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => {
                let start = self.pos;
                while self.peek().is_some_and(|c| c.is_ascii_digit() || c == '.' || c == 'e') {
                    self.pos += 1;
                }
                let text: String = self.chars[start..self.pos].iter().collect();
                let v: f64 = text.parse().map_err(|_| self.error("malformed number"))?;
                Ok(Poly::constant(v))
            }
            _ => Err(self.error("expected `x`, a number or `(`")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_common_forms() {
        assert_eq!(Poly::parse("x-0.5").unwrap(), Poly(vec![-0.5, 1.0]));
        assert_eq!(Poly::parse("x(x-1)").unwrap(), Poly(vec![0.0, -1.0, 1.0]));
        assert_eq!(Poly::parse("x*(x-1)").unwrap(), Poly(vec![0.0, -1.0, 1.0]));
        assert_eq!(Poly::parse("2x^3 - x + 1").unwrap(), Poly(vec![1.0, -1.0, 0.0, 2.0]));
        assert_eq!(Poly::parse("-x").unwrap(), Poly(vec![0.0, -1.0]));
        let p = Poly::parse("x - 1/3").unwrap();
        assert!((p.eval(1.0 / 3.0)).abs() < 1e-16);
        assert_eq!(Poly::parse("(x-1)^2").unwrap(), Poly(vec![1.0, -2.0, 1.0]));
    }

    #[test]
    fn rejects_garbage() {
        assert!(Poly::parse("x+").is_err());
        assert!(Poly::parse("y").is_err());
        assert!(Poly::parse("(x").is_err());
        assert!(Poly::parse("x/x").is_err());
    }

    #[test]
    fn degree_and_eval() {
        let p = Poly::parse("x(x-1)").unwrap();
        assert_eq!(p.degree(), 2);
        assert_eq!(p.eval(0.5), -0.25);
        assert_eq!(Poly::constant(3.0).degree(), 0);
    }
}

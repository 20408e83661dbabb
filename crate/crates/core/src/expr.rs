//! Small expression language for embedding components, e.g. `sin(x1)*cos(x2)`.
//!
//! Grammar: sums and products of rational constants, chart coordinates,
//! integer powers `^k`, and `sin cos sinh cosh exp` applied to affine arguments.

use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::scalar::{jet_of_elementary, AffineArg, BasePoint, Elementary, Jet};

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(Rational),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
    Call(Elementary, Box<Expr>),
}

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Num(BigInt),
    Ident(String),
    Op(char),
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            out.push(Token::Num(s.parse().expect("digits")));
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^()".contains(c) {
            out.push(Token::Op(c));
            i += 1;
        } else {
            return Err(Error::Parse(format!("unexpected character {c:?} in {src:?}")));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    names: &'a [String],
    src: &'a str,
}

impl Parser<'_> {
    fn err(&self, what: &str) -> Error {
        Error::Parse(format!("{what} at token {} of {:?}", self.pos, self.src))
    }

    fn peek_op(&self) -> Option<char> {
        match self.tokens.get(self.pos) {
            Some(Token::Op(c)) => Some(*c),
            _ => None,
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.peek_op() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(&format!("expected '{c}'")))
        }
    }

    fn sum(&mut self) -> Result<Expr> {
        let mut lhs = self.product()?;
        while let Some(c @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.product()?;
            lhs = if c == '+' {
                Expr::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn product(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(c @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if c == '*' {
                Expr::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Div(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.peek_op() == Some('-') {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek_op() != Some('^') {
            return Ok(base);
        }
        self.pos += 1;
        match self.tokens.get(self.pos) {
            Some(Token::Num(k)) => {
                let k = u32::try_from(k.clone()).map_err(|_| self.err("exponent too large"))?;
                self.pos += 1;
                Ok(Expr::Pow(Box::new(base), k))
            }
            _ => Err(self.err("exponent must be a non-negative integer")),
        }
    }

    fn atom(&mut self) -> Result<Expr> {
        let tok = self.tokens.get(self.pos).cloned().ok_or_else(|| self.err("unexpected end"))?;
        self.pos += 1;
        match tok {
            Token::Num(v) => Ok(Expr::Num(Rational::from_integer(v))),
            Token::Op('(') => {
                let e = self.sum()?;
                self.expect(')')?;
                Ok(e)
            }
            Token::Ident(name) => {
                if let Some(i) = self.names.iter().position(|n| *n == name) {
                    return Ok(Expr::Var(i));
                }
                let kind = match name.as_str() {
                    "sin" => Elementary::Sin,
                    "cos" => Elementary::Cos,
                    "sinh" => Elementary::Sinh,
                    "cosh" => Elementary::Cosh,
                    "exp" => Elementary::Exp,
                    _ => return Err(Error::Parse(format!("unknown name {name:?} in {:?}", self.src))),
                };
                self.expect('(')?;
                let arg = self.sum()?;
                self.expect(')')?;
                Ok(Expr::Call(kind, Box::new(arg)))
            }
            Token::Op(c) => Err(self.err(&format!("unexpected '{c}'"))),
        }
    }
}

/// Parses `src` over the chart coordinates `names`.
pub fn parse(src: &str, names: &[String]) -> Result<Expr> {
    let mut p = Parser { tokens: tokenize(src)?, pos: 0, names, src };
    let e = p.sum()?;
    if p.pos != p.tokens.len() {
        return Err(p.err("trailing input"));
    }
    Ok(e)
}

impl Expr {
    /// The expression as `offset + Σ cᵢxⁱ`, when it is affine.
    pub fn affine(&self, n: usize) -> Option<AffineArg> {
        let zero = || AffineArg { coeffs: vec![Rational::zero(); n], offset: Rational::zero() };
        let combine = |a: AffineArg, b: AffineArg, sign: &Rational| AffineArg {
            coeffs: a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| x + sign * y).collect(),
            offset: a.offset + sign * b.offset,
        };
        let scale = |a: AffineArg, r: &Rational| AffineArg {
            coeffs: a.coeffs.iter().map(|x| x * r).collect(),
            offset: a.offset * r,
        };
        let constant = |a: &AffineArg| a.coeffs.iter().all(Zero::is_zero);
        Some(match self {
            Expr::Num(r) => AffineArg { offset: r.clone(), ..zero() },
            Expr::Var(i) => AffineArg::coordinate(n, *i),
            Expr::Neg(a) => scale(a.affine(n)?, &-Rational::one()),
            Expr::Add(a, b) => combine(a.affine(n)?, b.affine(n)?, &Rational::one()),
            Expr::Sub(a, b) => combine(a.affine(n)?, b.affine(n)?, &-Rational::one()),
            Expr::Mul(a, b) => {
                let (a, b) = (a.affine(n)?, b.affine(n)?);
                if constant(&a) {
                    scale(b, &a.offset)
                } else if constant(&b) {
                    scale(a, &b.offset)
                } else {
                    return None;
                }
            }
            Expr::Div(a, b) => {
                let b = b.affine(n)?;
                if !constant(&b) || b.offset.is_zero() {
                    return None;
                }
                scale(a.affine(n)?, &b.offset.recip())
            }
            Expr::Pow(_, 0) => AffineArg { offset: Rational::one(), ..zero() },
            Expr::Pow(a, 1) => a.affine(n)?,
            Expr::Pow(..) | Expr::Call(..) => return None,
        })
    }

    /// Taylor jet of the expression at `base`.
    pub fn jet(&self, base: &Arc<BasePoint>, order: usize) -> Result<Jet> {
        let n = base.dim();
        Ok(match self {
            Expr::Num(r) => Jet::constant(base.clone(), order, r.clone()),
            Expr::Var(i) => Jet::coordinate(base.clone(), order, *i)?,
            Expr::Neg(a) => a.jet(base, order)?.neg(),
            Expr::Add(a, b) => a.jet(base, order)?.add(&b.jet(base, order)?)?,
            Expr::Sub(a, b) => a.jet(base, order)?.sub(&b.jet(base, order)?)?,
            Expr::Mul(a, b) => a.jet(base, order)?.mul(&b.jet(base, order)?)?,
            Expr::Div(a, b) => a.jet(base, order)?.mul(&b.jet(base, order)?.reciprocal()?)?,
            Expr::Pow(a, k) => {
                let x = a.jet(base, order)?;
                let mut acc = Jet::constant(base.clone(), order, Rational::one());
                for _ in 0..*k {
                    acc = acc.mul(&x)?;
                }
                acc
            }
            Expr::Call(kind, arg) => {
                let arg = arg.affine(n).ok_or_else(|| {
                    Error::Validation(format!("argument of {kind:?} is not affine in the coordinates"))
                })?;
                jet_of_elementary(kind, &arg, base.clone(), order)?
            }
        })
    }
}

/// Default coordinate names `x1, …, xn`.
pub fn default_names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("x{i}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, int};
    use crate::scalar::Anchor;

    fn names() -> Vec<String> {
        default_names(2)
    }

    #[test]
    fn polynomial_matches_direct_construction() {
        let base = Arc::new(BasePoint::rational(&[int(1), frac(1, 2)]));
        let e = parse("x1*x2 - x2^2/2 + 3", &names()).unwrap();
        let got = e.jet(&base, 4).unwrap();
        let x = Jet::coordinate(base.clone(), 4, 0).unwrap();
        let y = Jet::coordinate(base.clone(), 4, 1).unwrap();
        let want = x
            .mul(&y)
            .unwrap()
            .sub(&y.mul(&y).unwrap().scale(&frac(1, 2)))
            .unwrap()
            .add_constant(&int(3));
        assert_eq!(got, want);
    }

    #[test]
    fn trig_of_angle_anchor() {
        let base = Arc::new(BasePoint::new(vec![
            Anchor::angle(frac(3, 5), frac(4, 5)).unwrap(),
            Anchor::value(int(0)),
        ]));
        let e = parse("sin(x1)*cos(x2)", &names()).unwrap();
        let j = e.jet(&base, 3).unwrap();
        assert_eq!(j.value(), &frac(3, 5));
        assert_eq!(j.coeff(&[1, 0]), frac(4, 5));
        assert_eq!(j.coeff(&[0, 2]), frac(-3, 10));
    }

    #[test]
    fn affine_detection() {
        let n = names();
        assert!(parse("2*x1 - x2/3 + 1", &n).unwrap().affine(2).is_some());
        assert!(parse("x1*x2", &n).unwrap().affine(2).is_none());
        let base = Arc::new(BasePoint::origin(2));
        let err = parse("sin(x1*x2)", &n).unwrap().jet(&base, 2).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn reciprocal_and_errors() {
        let base = Arc::new(BasePoint::rational(&[int(2), int(0)]));
        let j = parse("1/x1", &names()).unwrap().jet(&base, 2).unwrap();
        assert_eq!(j.value(), &frac(1, 2));
        assert_eq!(j.coeff(&[1, 0]), frac(-1, 4));
        assert!(parse("x3", &names()).is_err());
        assert!(parse("x1 +", &names()).is_err());
        assert!(parse("x1 ^ x2", &names()).is_err());
        assert!(parse("(x1", &names()).is_err());
    }
}

//! Truncated formal power series in ħ over [`Scalar`].

use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};
use crate::scalar::Scalar;

/// `a[0] + a[1]ħ + … + a[N]ħᴺ`; every series in one computation shares `N`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HbarSeries {
    coeffs: Vec<Scalar>,
}

impl HbarSeries {
    pub fn zero(n: usize) -> Self {
        HbarSeries {
            coeffs: vec![Scalar::zero(); n + 1],
        }
    }

    pub fn one(n: usize) -> Self {
        Self::constant(n, Scalar::one())
    }

    /// `c` placed at order 0.
    pub fn constant(n: usize, c: Scalar) -> Self {
        let mut s = Self::zero(n);
        s.coeffs[0] = c;
        s
    }

    /// Series from coefficients; missing orders are zero, extra ones dropped.
    pub fn from_coeffs(n: usize, coeffs: impl IntoIterator<Item = Scalar>) -> Self {
        let mut s = Self::zero(n);
        for (q, c) in coeffs.into_iter().take(n + 1).enumerate() {
            s.coeffs[q] = c;
        }
        s
    }

    pub fn from_rationals(n: usize, coeffs: &[Rational]) -> Self {
        Self::from_coeffs(n, coeffs.iter().cloned().map(Scalar::Constant))
    }

    pub fn from_ints(n: usize, coeffs: &[i64]) -> Self {
        Self::from_coeffs(n, coeffs.iter().map(|&c| Scalar::int(c)))
    }

    /// `c·ħ^k`.
    pub fn monomial(n: usize, k: usize, c: Scalar) -> Self {
        let mut s = Self::zero(n);
        if k <= n {
            s.coeffs[k] = c;
        }
        s
    }

    /// Truncation order `N`.
    pub fn truncation(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Scalar] {
        &self.coeffs
    }

    pub fn coefficient(&self, q: usize) -> Result<&Scalar> {
        self.coeffs.get(q).ok_or(Error::OrderOutOfRange {
            q,
            max: self.truncation(),
        })
    }

    /// `a[q]`, reading zero beyond the truncation.
    pub(crate) fn at(&self, q: usize) -> &Scalar {
        &self.coeffs[q]
    }

    pub(crate) fn set(&mut self, q: usize, c: Scalar) {
        self.coeffs[q] = c;
    }

    fn check_order(&self, other: &Self) -> Result<()> {
        if self.truncation() != other.truncation() {
            return Err(Error::OrderMismatch {
                left: self.truncation(),
                right: other.truncation(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_order(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.add(b))
            .collect::<Result<_>>()?;
        Ok(HbarSeries { coeffs })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        HbarSeries {
            coeffs: self.coeffs.iter().map(Scalar::neg).collect(),
        }
    }

    pub fn scale(&self, r: &Rational) -> Self {
        HbarSeries {
            coeffs: self.coeffs.iter().map(|c| c.scale(r)).collect(),
        }
    }

    /// Multiplication by a scalar coefficient at every order.
    pub fn mul_scalar(&self, s: &Scalar) -> Result<Self> {
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| c.mul(s))
            .collect::<Result<_>>()?;
        Ok(HbarSeries { coeffs })
    }

    /// Product with a constant series `Σ r_k ħ^k` (the ℝ[[ħ]]-module action).
    pub fn scalar_multiple(&self, r: &[Rational]) -> Result<Self> {
        let n = self.truncation();
        let mut out = Self::zero(n);
        for q in 0..=n {
            let mut acc = Scalar::zero();
            for (k, rk) in r.iter().enumerate().take(q + 1) {
                if rk.is_zero() || self.coeffs[q - k].is_exact_zero() {
                    continue;
                }
                acc = acc.add(&self.coeffs[q - k].scale(rk))?;
            }
            out.coeffs[q] = acc;
        }
        Ok(out)
    }

    /// Multiplication by `ħ^k`.
    pub fn shift(&self, k: usize) -> Self {
        let n = self.truncation();
        let mut out = Self::zero(n);
        for q in k..=n {
            out.coeffs[q] = self.coeffs[q - k].clone();
        }
        out
    }

    pub fn partial(&self, i: usize) -> Result<Self> {
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| c.partial(i))
            .collect::<Result<_>>()?;
        Ok(HbarSeries { coeffs })
    }

    /// `(even, odd)` with `even + odd = self`.
    pub fn parity_split(&self) -> (Self, Self) {
        let n = self.truncation();
        let mut even = Self::zero(n);
        let mut odd = Self::zero(n);
        for (q, c) in self.coeffs.iter().enumerate() {
            if q % 2 == 0 {
                even.coeffs[q] = c.clone();
            } else {
                odd.coeffs[q] = c.clone();
            }
        }
        (even, odd)
    }

    /// `Σ (−1)^q a[q] ħ^q`; parity relations are statements about this map.
    pub fn parity_flip(&self) -> Self {
        HbarSeries {
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(q, c)| if q % 2 == 0 { c.clone() } else { c.neg() })
                .collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Scalar::is_zero)
    }

    /// Lowest order at which `self` and `other` differ on their common budget.
    pub fn first_difference(&self, other: &Self) -> Result<Option<usize>> {
        self.check_order(other)?;
        for (q, (a, b)) in self.coeffs.iter().zip(&other.coeffs).enumerate() {
            if !a.agrees_with(b)? {
                return Ok(Some(q));
            }
        }
        Ok(None)
    }

    pub fn agrees_with(&self, other: &Self) -> Result<bool> {
        Ok(self.first_difference(other)?.is_none())
    }

    /// Base-point values of all coefficients.
    pub fn values(&self) -> Vec<Rational> {
        self.coeffs.iter().map(|c| c.value().clone()).collect()
    }

    /// Whether every coefficient is a constant.
    pub fn is_constant(&self) -> bool {
        self.coeffs.iter().all(|c| c.order().is_none())
    }

    /// Human-readable form built from base-point values, e.g. `−ħ² + 3ħ³`.
    pub fn render(&self) -> String {
        render_values(&self.values())
    }
}

impl fmt::Display for HbarSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

const SUPERSCRIPTS: [char; 10] = ['⁰', '¹', '²', '³', '⁴', '⁵', '⁶', '⁷', '⁸', '⁹'];

pub fn superscript(k: usize) -> String {
    k.to_string()
        .chars()
        .map(|d| SUPERSCRIPTS[d.to_digit(10).unwrap() as usize])
        .collect()
}

fn hbar_power(q: usize) -> String {
    match q {
        0 => String::new(),
        1 => "ħ".into(),
        _ => format!("ħ{}", superscript(q)),
    }
}

/// Renders `Σ c_q ħ^q` with a true minus sign and superscript powers.
pub fn render_values(values: &[Rational]) -> String {
    let mut out = String::new();
    for (q, c) in values.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let negative = c < &Rational::zero();
        let mag = if negative { -c.clone() } else { c.clone() };
        if out.is_empty() {
            if negative {
                out.push('−');
            }
        } else {
            out.push_str(if negative { " − " } else { " + " });
        }
        let power = hbar_power(q);
        if q == 0 {
            out.push_str(&rational::format(&mag));
        } else if mag.is_one() {
            out.push_str(&power);
        } else if rational::is_integer(&mag) {
            out.push_str(&rational::format(&mag));
            out.push_str(&power);
        } else {
            out.push_str(&rational::format(&mag));
            out.push('·');
            out.push_str(&power);
        }
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

/// Constant ħ-series helpers used by closed-form oracles.
pub mod constants {
    use super::*;
    use crate::rational::factorial;

    /// `cosh(λħ)` truncated at `n`.
    pub fn cosh(lambda: &Rational, n: usize) -> Vec<Rational> {
        (0..=n)
            .map(|q| {
                if q % 2 == 0 {
                    pow(lambda, q) / Rational::from_integer(factorial(q))
                } else {
                    Rational::zero()
                }
            })
            .collect()
    }

    /// `sinh(λħ)` truncated at `n`.
    pub fn sinh(lambda: &Rational, n: usize) -> Vec<Rational> {
        (0..=n)
            .map(|q| {
                if q % 2 == 1 {
                    pow(lambda, q) / Rational::from_integer(factorial(q))
                } else {
                    Rational::zero()
                }
            })
            .collect()
    }

    /// Cauchy product truncated at `n`.
    pub fn mul(a: &[Rational], b: &[Rational], n: usize) -> Vec<Rational> {
        (0..=n)
            .map(|q| {
                (0..=q)
                    .filter(|&k| k < a.len() && q - k < b.len())
                    .map(|k| &a[k] * &b[q - k])
                    .fold(Rational::zero(), |acc, x| acc + x)
            })
            .collect()
    }

    fn pow(r: &Rational, k: usize) -> Rational {
        (0..k).fold(Rational::one(), |acc, _| acc * r)
    }
}

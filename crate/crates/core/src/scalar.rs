//! Coefficient ring: exact constants and truncated multivariate Taylor jets.
//!
//! A [`Jet`] stores the Taylor coefficients `∂^α f(base) / α!` for every
//! multi-index with `|α| ≤ order`. The order is a derivative budget: each
//! partial derivative consumes one unit and binary operations keep the
//! smaller budget, so a result never claims more precision than its inputs.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, LazyLock, Mutex};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rational::{self, factorial, Rational};

pub type MultiIndex = Vec<usize>;

/// Chart coordinate of the base point.
///
/// Angles are stored by their (rational) sine and cosine so that trigonometric
/// towers stay rational; the angle value itself is never needed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Anchor {
    Value(Rational),
    Angle {
        sin: Rational,
        cos: Rational,
    },
    /// `π · r`.
    PiMultiple(Rational),
}

impl Anchor {
    pub fn value(v: Rational) -> Self {
        Anchor::Value(v)
    }

    pub fn angle(sin: Rational, cos: Rational) -> Result<Self> {
        if &sin * &sin + &cos * &cos != Rational::one() {
            return Err(Error::Validation(format!(
                "angle anchor needs sin² + cos² = 1, got sin = {}, cos = {}",
                rational::format(&sin),
                rational::format(&cos)
            )));
        }
        Ok(Anchor::Angle { sin, cos })
    }

    /// The angle `2·atan(t)`, whose sine and cosine are rational.
    pub fn angle_from_tan_half(t: &Rational) -> Self {
        let one = Rational::one();
        let d = &one + t * t;
        Anchor::Angle {
            sin: (t + t) / &d,
            cos: (&one - t * t) / &d,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BasePoint(Vec<Anchor>);

impl BasePoint {
    pub fn new(anchors: Vec<Anchor>) -> Self {
        BasePoint(anchors)
    }

    pub fn rational(values: &[Rational]) -> Self {
        BasePoint(values.iter().cloned().map(Anchor::Value).collect())
    }

    pub fn origin(n: usize) -> Self {
        BasePoint(vec![Anchor::Value(Rational::zero()); n])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn anchors(&self) -> &[Anchor] {
        &self.0
    }
}

/// Affine argument `offset + Σ coeffs[i]·x^i` of an elementary function.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineArg {
    pub coeffs: Vec<Rational>,
    pub offset: Rational,
}

impl AffineArg {
    pub fn coordinate(n: usize, i: usize) -> Self {
        let mut coeffs = vec![Rational::zero(); n];
        coeffs[i] = Rational::one();
        AffineArg {
            coeffs,
            offset: Rational::zero(),
        }
    }

    /// Value at the base point, which must be rational.
    fn real_at(&self, base: &BasePoint) -> Result<Rational> {
        let mut v = self.offset.clone();
        for (a, anchor) in self.coeffs.iter().zip(base.anchors()) {
            if a.is_zero() {
                continue;
            }
            match anchor {
                Anchor::Value(x) => v += a * x,
                _ => {
                    return Err(Error::IrrationalBase(
                        "argument involves an angle or π anchor".into(),
                    ))
                }
            }
        }
        Ok(v)
    }

    /// `(sin, cos)` of the argument at the base point.
    fn trig_at(&self, base: &BasePoint) -> Result<(Rational, Rational)> {
        let mut rational_part = self.offset.clone();
        let mut pi_part = Rational::zero();
        let mut acc = (Rational::zero(), Rational::one());
        for (a, anchor) in self.coeffs.iter().zip(base.anchors()) {
            if a.is_zero() {
                continue;
            }
            match anchor {
                Anchor::Value(x) => rational_part += a * x,
                Anchor::PiMultiple(r) => pi_part += a * r,
                Anchor::Angle { sin, cos } => {
                    if !rational::is_integer(a) {
                        return Err(Error::IrrationalBase(format!(
                            "non-integer multiple {} of an angle anchor",
                            rational::format(a)
                        )));
                    }
                    let k = a
                        .to_integer()
                        .to_i64()
                        .ok_or_else(|| Error::IrrationalBase("angle multiple too large".into()))?;
                    acc = angle_add(&acc, &angle_multiple(sin, cos, k));
                }
            }
        }
        if !rational_part.is_zero() {
            return Err(Error::IrrationalBase(format!(
                "trigonometric value at nonzero rational {}",
                rational::format(&rational_part)
            )));
        }
        let twice = &pi_part + &pi_part;
        if !rational::is_integer(&twice) {
            return Err(Error::IrrationalBase(format!(
                "trigonometric value at π·{}",
                rational::format(&pi_part)
            )));
        }
        let half_turns = twice
            .to_integer()
            .mod_floor(&BigInt::from(4))
            .to_u8()
            .unwrap();
        let pi = match half_turns {
            0 => (Rational::zero(), Rational::one()),
            1 => (Rational::one(), Rational::zero()),
            2 => (Rational::zero(), -Rational::one()),
            _ => (-Rational::one(), Rational::zero()),
        };
        Ok(angle_add(&acc, &pi))
    }
}

fn angle_add(a: &(Rational, Rational), b: &(Rational, Rational)) -> (Rational, Rational) {
    (&a.0 * &b.1 + &a.1 * &b.0, &a.1 * &b.1 - &a.0 * &b.0)
}

fn angle_multiple(sin: &Rational, cos: &Rational, k: i64) -> (Rational, Rational) {
    let step = if k < 0 {
        (-sin.clone(), cos.clone())
    } else {
        (sin.clone(), cos.clone())
    };
    let mut out = (Rational::zero(), Rational::one());
    for _ in 0..k.unsigned_abs() {
        out = angle_add(&out, &step);
    }
    out
}

/// Elementary univariate functions that can be turned into jets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Elementary {
    Sin,
    Cos,
    Sinh,
    Cosh,
    Exp,
    /// Coefficients `c_0, c_1, …` of `Σ c_k t^k`.
    Polynomial(Vec<Rational>),
    /// `f(t_0), f'(t_0), f''(t_0), …` at the argument's base value.
    DerivativeTable(Vec<Rational>),
}

// ---------------------------------------------------------------------------
// Multi-index layout

/// Graded enumeration of multi-indices of `n` variables up to `order`.
///
/// Monomials are sorted by total degree, so the layout of a lower order is a
/// prefix of the layout of a higher one and truncation is slicing.
pub(crate) struct Layout {
    monomials: Vec<Box<[u8]>>,
    lookup: HashMap<Box<[u8]>, usize>,
    /// `mul[a][b]` is the index of monomial `a·b` for every `b` that fits.
    mul: Vec<Box<[u32]>>,
}

type LayoutCache = Mutex<HashMap<(usize, usize), Arc<Layout>>>;

static LAYOUTS: LazyLock<LayoutCache> =
    LazyLock::new(|| Mutex::new(HashMap::new()));

fn monomials_of_degree(n: usize, d: usize, out: &mut Vec<Box<[u8]>>) {
    fn rec(n: usize, pos: usize, left: usize, cur: &mut Vec<u8>, out: &mut Vec<Box<[u8]>>) {
        if pos + 1 == n {
            cur[pos] = left as u8;
            out.push(cur.clone().into_boxed_slice());
            return;
        }
        for k in (0..=left).rev() {
            cur[pos] = k as u8;
            rec(n, pos + 1, left - k, cur, out);
        }
        cur[pos] = 0;
    }
    if n == 0 {
        if d == 0 {
            out.push(Box::new([]));
        }
        return;
    }
    let mut cur = vec![0u8; n];
    rec(n, 0, d, &mut cur, out);
}

impl Layout {
    fn build(n: usize, order: usize) -> Layout {
        assert!(order < 250, "jet order {order} too large");
        let mut monomials = Vec::new();
        let mut len_upto = Vec::with_capacity(order + 1);
        for d in 0..=order {
            monomials_of_degree(n, d, &mut monomials);
            len_upto.push(monomials.len());
        }
        let degrees: Vec<usize> = monomials
            .iter()
            .map(|m| m.iter().map(|&e| e as usize).sum())
            .collect();
        let lookup: HashMap<Box<[u8]>, usize> = monomials
            .iter()
            .enumerate()
            .map(|(i, m)| (m.clone(), i))
            .collect();
        let mut mul = Vec::with_capacity(monomials.len());
        let mut buf = vec![0u8; n];
        for (i, a) in monomials.iter().enumerate() {
            let room = len_upto[order - degrees[i]];
            let row: Vec<u32> = monomials[..room]
                .iter()
                .map(|b| {
                    for v in 0..n {
                        buf[v] = a[v] + b[v];
                    }
                    lookup[&buf[..]] as u32
                })
                .collect();
            mul.push(row.into_boxed_slice());
        }
        Layout {
            monomials,
            lookup,
            mul,
        }
    }

    pub(crate) fn get(n: usize, order: usize) -> Arc<Layout> {
        let mut cache = LAYOUTS.lock().unwrap_or_else(|e| e.into_inner());
        cache
            .entry((n, order))
            .or_insert_with(|| Arc::new(Layout::build(n, order)))
            .clone()
    }

    fn len(&self) -> usize {
        self.monomials.len()
    }

    fn index_of(&self, alpha: &[usize]) -> Option<usize> {
        let key: Vec<u8> = alpha.iter().map(|&a| a.min(255) as u8).collect();
        self.lookup.get(&key[..]).copied()
    }
}

// ---------------------------------------------------------------------------
// Jets

/// Truncated Taylor expansion at a base point, stored as integer numerators
/// over one shared denominator.
///
/// The representation is canonical: the denominator is positive and coprime
/// to the content of the numerators, and the zero jet has denominator 1.
#[derive(Clone)]
pub struct Jet {
    base: Arc<BasePoint>,
    order: usize,
    num: Vec<BigInt>,
    den: BigInt,
    value: Rational,
    layout: Arc<Layout>,
}

impl PartialEq for Jet {
    fn eq(&self, other: &Self) -> bool {
        self.order == other.order
            && self.den == other.den
            && self.num == other.num
            && same_base(&self.base, &other.base)
    }
}

impl Eq for Jet {}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Jet(order {}, ", self.order)?;
        let mut first = true;
        for (alpha, c) in self.terms() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{}·x^{:?}", rational::format(&c), alpha)?;
        }
        if first {
            write!(f, "0")?;
        }
        write!(f, ")")
    }
}

fn same_base(a: &Arc<BasePoint>, b: &Arc<BasePoint>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

fn check_shape(a: &Jet, b: &Jet) -> Result<()> {
    if !same_base(&a.base, &b.base) {
        return Err(Error::ShapeMismatch(if a.base.dim() != b.base.dim() {
            format!("jets over {} and {} variables", a.base.dim(), b.base.dim())
        } else {
            "jets at different base points".to_string()
        }));
    }
    Ok(())
}

impl Jet {
    fn from_parts(
        base: Arc<BasePoint>,
        order: usize,
        layout: Arc<Layout>,
        mut num: Vec<BigInt>,
        mut den: BigInt,
    ) -> Jet {
        let mut g = den.clone();
        let mut all_zero = true;
        for x in &num {
            if x.is_zero() {
                continue;
            }
            all_zero = false;
            if !g.is_one() {
                g = g.gcd(x);
            }
        }
        if all_zero {
            den = BigInt::one();
        } else {
            if den.sign() == num_bigint::Sign::Minus {
                g = -g;
            }
            if !g.is_one() {
                for x in num.iter_mut() {
                    if !x.is_zero() {
                        *x /= &g;
                    }
                }
                den /= &g;
            }
        }
        let value = Rational::new(num[0].clone(), den.clone());
        Jet {
            base,
            order,
            num,
            den,
            value,
            layout,
        }
    }

    fn from_rationals(
        base: Arc<BasePoint>,
        order: usize,
        layout: Arc<Layout>,
        coeffs: &[Rational],
    ) -> Jet {
        let den = coeffs
            .iter()
            .filter(|c| !c.is_zero())
            .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let num = coeffs
            .iter()
            .map(|c| {
                if c.is_zero() {
                    BigInt::zero()
                } else {
                    c.numer() * (&den / c.denom())
                }
            })
            .collect();
        Jet::from_parts(base, order, layout, num, den)
    }

    pub fn zero(base: Arc<BasePoint>, order: usize) -> Jet {
        let layout = Layout::get(base.dim(), order);
        let num = vec![BigInt::zero(); layout.len()];
        Jet {
            base,
            order,
            num,
            den: BigInt::one(),
            value: Rational::zero(),
            layout,
        }
    }

    pub fn constant(base: Arc<BasePoint>, order: usize, c: Rational) -> Jet {
        let mut j = Jet::zero(base, order);
        j.num[0] = c.numer().clone();
        j.den = c.denom().clone();
        j.value = c;
        j
    }

    /// Builds a jet from `(multi-index, coefficient)` pairs; repeated indices add up.
    pub fn from_terms(
        base: Arc<BasePoint>,
        order: usize,
        terms: impl IntoIterator<Item = (MultiIndex, Rational)>,
    ) -> Result<Jet> {
        let n = base.dim();
        let layout = Layout::get(n, order);
        let mut coeffs = vec![Rational::zero(); layout.len()];
        for (alpha, c) in terms {
            if alpha.len() != n {
                return Err(Error::ShapeMismatch(format!(
                    "multi-index {alpha:?} has length {}, expected {n}",
                    alpha.len()
                )));
            }
            if alpha.iter().sum::<usize>() > order {
                return Err(Error::ShapeMismatch(format!(
                    "multi-index {alpha:?} exceeds jet order {order}"
                )));
            }
            coeffs[layout.index_of(&alpha).expect("in layout")] += c;
        }
        Ok(Jet::from_rationals(base, order, layout, &coeffs))
    }

    /// The coordinate function `x^i`; its value at the base must be rational.
    pub fn coordinate(base: Arc<BasePoint>, order: usize, i: usize) -> Result<Jet> {
        let n = base.dim();
        if i >= n {
            return Err(Error::ShapeMismatch(format!("coordinate {} of {n}", i + 1)));
        }
        let value = match &base.anchors()[i] {
            Anchor::Value(v) => v.clone(),
            _ => {
                return Err(Error::IrrationalBase(format!(
                    "coordinate x^{} at a non-rational anchor",
                    i + 1
                )))
            }
        };
        let mut terms = vec![(vec![0; n], value)];
        if order >= 1 {
            let mut e = vec![0; n];
            e[i] = 1;
            terms.push((e, Rational::one()));
        }
        Jet::from_terms(base, order, terms)
    }

    pub fn num_vars(&self) -> usize {
        self.base.dim()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn base_point(&self) -> &Arc<BasePoint> {
        &self.base
    }

    /// Value at the base point.
    pub fn value(&self) -> &Rational {
        &self.value
    }

    fn coefficient_at(&self, i: usize) -> Rational {
        if self.num[i].is_zero() {
            Rational::zero()
        } else {
            Rational::new(self.num[i].clone(), self.den.clone())
        }
    }

    /// Taylor coefficient of `x^α` (not the derivative).
    pub fn coeff(&self, alpha: &[usize]) -> Rational {
        if alpha.len() != self.num_vars() || alpha.iter().sum::<usize>() > self.order {
            return Rational::zero();
        }
        self.layout
            .index_of(alpha)
            .map(|i| self.coefficient_at(i))
            .unwrap_or_default()
    }

    /// Every multi-index of the layout, in graded order.
    pub fn all_indices(&self) -> impl Iterator<Item = MultiIndex> + '_ {
        self.layout
            .monomials
            .iter()
            .map(|m| m.iter().map(|&e| e as usize).collect())
    }

    /// Nonzero coefficients in graded order.
    pub fn terms(&self) -> impl Iterator<Item = (MultiIndex, Rational)> + '_ {
        (0..self.num.len())
            .filter(|&i| !self.num[i].is_zero())
            .map(move |i| {
                (
                    self.layout.monomials[i]
                        .iter()
                        .map(|&e| e as usize)
                        .collect(),
                    self.coefficient_at(i),
                )
            })
    }

    pub fn is_zero(&self) -> bool {
        self.num.iter().all(Zero::is_zero)
    }

    pub fn truncate(&self, order: usize) -> Jet {
        if order >= self.order {
            return self.clone();
        }
        let layout = Layout::get(self.num_vars(), order);
        let num = self.num[..layout.len()].to_vec();
        Jet::from_parts(self.base.clone(), order, layout, num, self.den.clone())
    }

    fn combine(&self, other: &Jet, sign: bool) -> Result<Jet> {
        check_shape(self, other)?;
        let lo = if self.order <= other.order {
            self
        } else {
            other
        };
        let len = lo.layout.len();
        let (a, b) = (&self.num[..len], &other.num[..len]);
        let (num, den): (Vec<BigInt>, BigInt) = if self.den == other.den {
            let num = a
                .iter()
                .zip(b)
                .map(|(x, y)| if sign { x + y } else { x - y })
                .collect();
            (num, self.den.clone())
        } else {
            let den = self.den.lcm(&other.den);
            let fa = &den / &self.den;
            let fb = &den / &other.den;
            let num = a
                .iter()
                .zip(b)
                .map(|(x, y)| {
                    let x = if x.is_zero() { BigInt::zero() } else { x * &fa };
                    if y.is_zero() {
                        x
                    } else if sign {
                        x + y * &fb
                    } else {
                        x - y * &fb
                    }
                })
                .collect();
            (num, den)
        };
        Ok(Jet::from_parts(
            lo.base.clone(),
            lo.order,
            lo.layout.clone(),
            num,
            den,
        ))
    }

    pub fn add(&self, other: &Jet) -> Result<Jet> {
        self.combine(other, true)
    }

    pub fn sub(&self, other: &Jet) -> Result<Jet> {
        self.combine(other, false)
    }

    pub fn neg(&self) -> Jet {
        Jet {
            num: self.num.iter().map(|c| -c).collect(),
            value: -&self.value,
            ..self.clone()
        }
    }

    pub fn scale(&self, r: &Rational) -> Jet {
        if r.is_zero() {
            return Jet::zero(self.base.clone(), self.order);
        }
        let num = self
            .num
            .iter()
            .map(|c| {
                if c.is_zero() {
                    BigInt::zero()
                } else {
                    c * r.numer()
                }
            })
            .collect();
        Jet::from_parts(
            self.base.clone(),
            self.order,
            self.layout.clone(),
            num,
            &self.den * r.denom(),
        )
    }

    pub fn add_constant(&self, r: &Rational) -> Jet {
        let den = self.den.lcm(r.denom());
        let f = &den / &self.den;
        let mut num: Vec<BigInt> = self.num.iter().map(|c| c * &f).collect();
        num[0] += r.numer() * (&den / r.denom());
        Jet::from_parts(self.base.clone(), self.order, self.layout.clone(), num, den)
    }

    /// Truncated Taylor product.
    pub fn mul(&self, other: &Jet) -> Result<Jet> {
        check_shape(self, other)?;
        let lo = if self.order <= other.order {
            self
        } else {
            other
        };
        let layout = lo.layout.clone();
        let len = layout.len();
        let num = mul_kernel(&layout, &self.num[..len], &other.num[..len]);
        Ok(Jet::from_parts(
            lo.base.clone(),
            lo.order,
            layout,
            num,
            &self.den * &other.den,
        ))
    }

    /// `∂/∂x^{i+1}`; consumes one unit of budget.
    pub fn partial(&self, i: usize) -> Result<Jet> {
        let n = self.num_vars();
        if i >= n {
            return Err(Error::ShapeMismatch(format!(
                "∂_{} on a jet in {n} variables",
                i + 1
            )));
        }
        let mut alpha = vec![0; n];
        alpha[i] = 1;
        self.derivative(&alpha)
    }

    /// `∂^α`, consuming `|α|` units of budget.
    pub fn derivative(&self, alpha: &[usize]) -> Result<Jet> {
        let n = self.num_vars();
        if alpha.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "derivative multi-index {alpha:?} for {n} variables"
            )));
        }
        let total: usize = alpha.iter().sum();
        if total > self.order {
            return Err(Error::BudgetExhausted(format!(
                "∂^{alpha:?} of an order-{} jet",
                self.order
            )));
        }
        if total == 0 {
            return Ok(self.clone());
        }
        let order = self.order - total;
        let layout = Layout::get(n, order);
        let row = &self.layout.mul[self.layout.index_of(alpha).expect("in layout")];
        let num = (0..layout.len())
            .map(|b| {
                let c = &self.num[row[b] as usize];
                if c.is_zero() {
                    return BigInt::zero();
                }
                // Π (β_v + α_v)! / β_v!
                let mut k: u128 = 1;
                for (v, &a) in alpha.iter().enumerate() {
                    let beta = layout.monomials[b][v] as u128;
                    for t in 1..=a as u128 {
                        k *= beta + t;
                    }
                }
                if k == 1 {
                    c.clone()
                } else {
                    c * BigInt::from(k)
                }
            })
            .collect();
        Ok(Jet::from_parts(
            self.base.clone(),
            order,
            layout,
            num,
            self.den.clone(),
        ))
    }

    /// Multiplicative inverse; the base value must be nonzero.
    pub fn reciprocal(&self) -> Result<Jet> {
        let c0 = self.value().clone();
        if c0.is_zero() {
            return Err(Error::NotInvertible(
                "jet vanishes at the base point".into(),
            ));
        }
        let inv0 = Rational::one() / &c0;
        // 1/f = (1/c0) Σ_k (-h)^k with h = f/c0 - 1, nilpotent of index order+1.
        let neg_h = self.scale(&(-&inv0)).add_constant(&Rational::one());
        let mut sum = Jet::constant(self.base.clone(), self.order, Rational::one());
        let mut power = sum.clone();
        for _ in 0..self.order {
            power = power.mul(&neg_h)?;
            sum = sum.add(&power)?;
        }
        Ok(sum.scale(&inv0))
    }

    /// `Σ_k derivs[k]/k! · L^k` where `L` is the linear part of `arg` at the base.
    fn compose_univariate(
        derivs: &[Rational],
        arg: &AffineArg,
        base: Arc<BasePoint>,
        order: usize,
    ) -> Result<Jet> {
        let n = base.dim();
        if arg.coeffs.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "affine argument over {} variables on a {n}-dimensional chart",
                arg.coeffs.len()
            )));
        }
        if derivs.is_empty() {
            return Err(Error::BudgetExhausted("empty derivative table".into()));
        }
        let order = order.min(derivs.len() - 1);
        let linear = if order == 0 {
            Jet::zero(base.clone(), 0)
        } else {
            Jet::from_terms(
                base.clone(),
                order,
                arg.coeffs
                    .iter()
                    .enumerate()
                    .filter(|(_, a)| !a.is_zero())
                    .map(|(i, a)| {
                        let mut e = vec![0; n];
                        e[i] = 1;
                        (e, a.clone())
                    }),
            )?
        };
        let mut out = Jet::constant(base.clone(), order, derivs[0].clone());
        let mut power = Jet::constant(base, order, Rational::one());
        for (k, d) in derivs.iter().enumerate().take(order + 1).skip(1) {
            power = power.mul(&linear)?;
            if d.is_zero() {
                continue;
            }
            let c = d / Rational::from_integer(factorial(k));
            out = out.add(&power.scale(&c))?;
        }
        Ok(out)
    }
}

/// Integer convolution of two numerator vectors in the same layout, with an
/// `i128` fast path when no intermediate sum can overflow.
fn mul_kernel(layout: &Layout, a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let len = a.len();
    let nz_a: Vec<usize> = (0..len).filter(|&i| !a[i].is_zero()).collect();
    let nz_b: Vec<usize> = (0..len).filter(|&i| !b[i].is_zero()).collect();
    let mut out = vec![BigInt::zero(); len];
    if nz_a.is_empty() || nz_b.is_empty() {
        return out;
    }
    let bits_a = nz_a.iter().map(|&i| a[i].bits()).max().unwrap_or(0);
    let bits_b = nz_b.iter().map(|&j| b[j].bits()).max().unwrap_or(0);
    let terms_bits = 64 - (nz_a.len().min(nz_b.len()) as u64).leading_zeros() as u64;
    if bits_a + bits_b + terms_bits < 126 {
        let sa: Vec<i128> = nz_a.iter().map(|&i| a[i].to_i128().unwrap()).collect();
        let sb: Vec<i128> = nz_b.iter().map(|&j| b[j].to_i128().unwrap()).collect();
        let mut acc = vec![0i128; len];
        for (ai, &i) in nz_a.iter().enumerate() {
            let row = &layout.mul[i];
            for (bj, &j) in nz_b.iter().enumerate() {
                if j >= row.len() {
                    break;
                }
                acc[row[j] as usize] += sa[ai] * sb[bj];
            }
        }
        for (o, v) in out.iter_mut().zip(acc) {
            if v != 0 {
                *o = BigInt::from(v);
            }
        }
    } else {
        for &i in &nz_a {
            let row = &layout.mul[i];
            for &j in &nz_b {
                if j >= row.len() {
                    break;
                }
                out[row[j] as usize] += &a[i] * &b[j];
            }
        }
    }
    out
}

/// Exact Taylor jet of an elementary function of an affine argument.
pub fn jet_of_elementary(
    kind: &Elementary,
    arg: &AffineArg,
    base: Arc<BasePoint>,
    order: usize,
) -> Result<Jet> {
    let one = Rational::one;
    let zero = Rational::zero;
    let cycle = |vals: [Rational; 4]| -> Vec<Rational> {
        (0..=order).map(|k| vals[k % 4].clone()).collect()
    };
    let real_zero = |what: &str| -> Result<()> {
        let v = arg.real_at(&base)?;
        if !v.is_zero() {
            return Err(Error::IrrationalBase(format!(
                "{what} at {} is not rational",
                rational::format(&v)
            )));
        }
        Ok(())
    };
    let derivs = match kind {
        Elementary::Sin => {
            let (s, c) = arg.trig_at(&base)?;
            cycle([s.clone(), c.clone(), -s, -c])
        }
        Elementary::Cos => {
            let (s, c) = arg.trig_at(&base)?;
            cycle([c.clone(), -s.clone(), -c, s])
        }
        Elementary::Sinh => {
            real_zero("sinh")?;
            cycle([zero(), one(), zero(), one()])
        }
        Elementary::Cosh => {
            real_zero("cosh")?;
            cycle([one(), zero(), one(), zero()])
        }
        Elementary::Exp => {
            real_zero("exp")?;
            vec![one(); order + 1]
        }
        Elementary::Polynomial(p) => {
            let t0 = arg.real_at(&base)?;
            polynomial_derivatives(p, &t0, order)
        }
        Elementary::DerivativeTable(t) => t.clone(),
    };
    Jet::compose_univariate(&derivs, arg, base, order)
}

/// `p(t0), p'(t0), …, p^{(order)}(t0)`.
pub fn polynomial_derivatives(p: &[Rational], t0: &Rational, order: usize) -> Vec<Rational> {
    let mut cur: Vec<Rational> = p.to_vec();
    let mut out = Vec::with_capacity(order + 1);
    for _ in 0..=order {
        let v = cur
            .iter()
            .rev()
            .fold(Rational::zero(), |acc, c| acc * t0 + c);
        out.push(v);
        cur = cur
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c * Rational::from_integer(BigInt::from(k)))
            .collect();
    }
    out
}

// ---------------------------------------------------------------------------
// Scalars

/// Element of the coefficient ring: an exact constant (unbounded budget) or a jet.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Scalar {
    Constant(Rational),
    Jet(Jet),
}

impl Default for Scalar {
    fn default() -> Self {
        Scalar::zero()
    }
}

impl From<Rational> for Scalar {
    fn from(r: Rational) -> Self {
        Scalar::Constant(r)
    }
}

impl From<Jet> for Scalar {
    fn from(j: Jet) -> Self {
        Scalar::Jet(j)
    }
}

impl Scalar {
    pub fn zero() -> Scalar {
        Scalar::Constant(Rational::zero())
    }

    pub fn one() -> Scalar {
        Scalar::Constant(Rational::one())
    }

    pub fn constant(r: Rational) -> Scalar {
        Scalar::Constant(r)
    }

    pub fn int(v: i64) -> Scalar {
        Scalar::Constant(rational::int(v))
    }

    /// `None` stands for an unbounded budget.
    pub fn order(&self) -> Option<usize> {
        match self {
            Scalar::Constant(_) => None,
            Scalar::Jet(j) => Some(j.order()),
        }
    }

    pub fn value(&self) -> &Rational {
        match self {
            Scalar::Constant(c) => c,
            Scalar::Jet(j) => j.value(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Constant(c) => c.is_zero(),
            Scalar::Jet(j) => j.is_zero(),
        }
    }

    /// Zero with unbounded budget; such terms can be skipped without losing precision.
    pub fn is_exact_zero(&self) -> bool {
        matches!(self, Scalar::Constant(c) if c.is_zero())
    }

    pub fn as_jet(&self) -> Option<&Jet> {
        match self {
            Scalar::Jet(j) => Some(j),
            Scalar::Constant(_) => None,
        }
    }

    pub fn add(&self, other: &Scalar) -> Result<Scalar> {
        Ok(match (self, other) {
            (Scalar::Constant(a), Scalar::Constant(b)) => Scalar::Constant(a + b),
            (Scalar::Constant(a), Scalar::Jet(j)) | (Scalar::Jet(j), Scalar::Constant(a)) => {
                Scalar::Jet(j.add_constant(a))
            }
            (Scalar::Jet(a), Scalar::Jet(b)) => Scalar::Jet(a.add(b)?),
        })
    }

    pub fn sub(&self, other: &Scalar) -> Result<Scalar> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Scalar {
        match self {
            Scalar::Constant(a) => Scalar::Constant(-a),
            Scalar::Jet(j) => Scalar::Jet(j.neg()),
        }
    }

    pub fn scale(&self, r: &Rational) -> Scalar {
        match self {
            Scalar::Constant(a) => Scalar::Constant(a * r),
            Scalar::Jet(j) => Scalar::Jet(j.scale(r)),
        }
    }

    pub fn mul(&self, other: &Scalar) -> Result<Scalar> {
        Ok(match (self, other) {
            (Scalar::Constant(a), Scalar::Constant(b)) => Scalar::Constant(a * b),
            (Scalar::Constant(a), Scalar::Jet(j)) | (Scalar::Jet(j), Scalar::Constant(a)) => {
                Scalar::Jet(j.scale(a))
            }
            (Scalar::Jet(a), Scalar::Jet(b)) => Scalar::Jet(a.mul(b)?),
        })
    }

    pub fn partial(&self, i: usize) -> Result<Scalar> {
        match self {
            Scalar::Constant(_) => Ok(Scalar::zero()),
            Scalar::Jet(j) => Ok(Scalar::Jet(j.partial(i)?)),
        }
    }

    pub fn derivative(&self, alpha: &[usize]) -> Result<Scalar> {
        match self {
            Scalar::Constant(c) => Ok(if alpha.iter().all(|&a| a == 0) {
                Scalar::Constant(c.clone())
            } else {
                Scalar::zero()
            }),
            Scalar::Jet(j) => Ok(Scalar::Jet(j.derivative(alpha)?)),
        }
    }

    pub fn reciprocal(&self) -> Result<Scalar> {
        match self {
            Scalar::Constant(c) if c.is_zero() => {
                Err(Error::NotInvertible("division by the constant 0".into()))
            }
            Scalar::Constant(c) => Ok(Scalar::Constant(Rational::one() / c)),
            Scalar::Jet(j) => Ok(Scalar::Jet(j.reciprocal()?)),
        }
    }

    pub fn truncate(&self, order: usize) -> Scalar {
        match self {
            Scalar::Constant(_) => self.clone(),
            Scalar::Jet(j) => Scalar::Jet(j.truncate(order)),
        }
    }

    /// Equality on the common budget of both operands.
    pub fn agrees_with(&self, other: &Scalar) -> Result<bool> {
        Ok(self.sub(other)?.is_zero())
    }

    /// Short human-readable form: constants exactly, jets by their base value.
    pub fn display_value(&self) -> String {
        match self {
            Scalar::Constant(c) => rational::format(c),
            Scalar::Jet(j) => format!("{}[o{}]", rational::format(j.value()), j.order()),
        }
    }
}

// ---------------------------------------------------------------------------
// Serialization

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum AnchorRepr {
    Value(String),
    Angle { sin: String, cos: String },
    Pi { pi: String },
}

impl Serialize for Anchor {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let repr = match self {
            Anchor::Value(v) => AnchorRepr::Value(rational::format(v)),
            Anchor::Angle { sin, cos } => AnchorRepr::Angle {
                sin: rational::format(sin),
                cos: rational::format(cos),
            },
            Anchor::PiMultiple(r) => AnchorRepr::Pi {
                pi: rational::format(r),
            },
        };
        repr.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Anchor {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let p = |s: &str| rational::parse(s).map_err(D::Error::custom);
        match AnchorRepr::deserialize(d)? {
            AnchorRepr::Value(v) => Ok(Anchor::Value(p(&v)?)),
            AnchorRepr::Angle { sin, cos } => {
                Anchor::angle(p(&sin)?, p(&cos)?).map_err(D::Error::custom)
            }
            AnchorRepr::Pi { pi } => Ok(Anchor::PiMultiple(p(&pi)?)),
        }
    }
}

impl Serialize for BasePoint {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

impl<'de> Deserialize<'de> for BasePoint {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Ok(BasePoint(Vec::<Anchor>::deserialize(d)?))
    }
}

#[derive(Serialize, Deserialize)]
struct JetRepr {
    base_point: BasePoint,
    order: usize,
    coeffs: Vec<(MultiIndex, String)>,
}

impl Serialize for Jet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        JetRepr {
            base_point: (*self.base).clone(),
            order: self.order,
            coeffs: self
                .terms()
                .map(|(a, c)| (a, rational::format(&c)))
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Jet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let r = JetRepr::deserialize(d)?;
        let terms = r
            .coeffs
            .into_iter()
            .map(|(a, c)| rational::parse(&c).map(|c| (a, c)))
            .collect::<Result<Vec<_>>>()
            .map_err(D::Error::custom)?;
        Jet::from_terms(Arc::new(r.base_point), r.order, terms).map_err(D::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ScalarRepr {
    Constant(String),
    Jet(Jet),
}

impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Scalar::Constant(c) => s.serialize_str(&rational::format(c)),
            Scalar::Jet(j) => j.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        match ScalarRepr::deserialize(d)? {
            ScalarRepr::Constant(c) => Ok(Scalar::Constant(
                rational::parse(&c).map_err(D::Error::custom)?,
            )),
            ScalarRepr::Jet(j) => Ok(Scalar::Jet(j)),
        }
    }
}

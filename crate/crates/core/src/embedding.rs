//! Quantum fluctuations induced by isometric embeddings, the spherically
//! symmetric family and its closed forms, and a classical Levi-Civita oracle.

use std::sync::Arc;

use num_traits::{One, Zero};
use serde_json::json;

use crate::check::Outcome;
use crate::connection::{Chiral, Connection};
use crate::error::{Error, Result};
use crate::metric::{pointwise_inverse, InverseMetric, NcMetric};
use crate::rational::{self, frac, Rational};
use crate::scalar::{jet_of_elementary, AffineArg, Anchor, BasePoint, Elementary, Scalar};
use crate::series::{constants, HbarSeries};
use crate::star::{StarProduct, ThetaMatrix};
use crate::tensor::{index_tuples, label, Tensor};

/// `X : U → ℝ^{p, m−p}` given by `m` component functions over an `n`-dimensional chart.
#[derive(Clone, Debug, PartialEq)]
pub struct IsometricEmbedding {
    dim: usize,
    components: Vec<Scalar>,
    signature: Vec<i8>,
}

impl IsometricEmbedding {
    pub fn new(dim: usize, components: Vec<Scalar>, signature: Vec<i8>) -> Result<Self> {
        if components.len() < dim {
            return Err(Error::ShapeMismatch(format!(
                "{} components cannot embed a {dim}-dimensional chart",
                components.len()
            )));
        }
        if signature.len() != components.len() {
            return Err(Error::ShapeMismatch(format!(
                "signature of length {} for {} components",
                signature.len(),
                components.len()
            )));
        }
        if let Some(s) = signature.iter().find(|s| s.abs() != 1) {
            return Err(Error::Validation(format!("signature entry {s} is not ±1")));
        }
        for c in &components {
            if let Scalar::Jet(j) = c {
                if j.num_vars() != dim {
                    return Err(Error::ShapeMismatch(format!(
                        "component jet in {} variables on a {dim}-dimensional chart",
                        j.num_vars()
                    )));
                }
            }
        }
        Ok(IsometricEmbedding {
            dim,
            components,
            signature,
        })
    }

    /// `η = diag(−1, …, −1, 1, …, 1)` with `p` minus signs.
    pub fn with_negative(dim: usize, components: Vec<Scalar>, p: usize) -> Result<Self> {
        let m = components.len();
        if p > m {
            return Err(Error::Validation(format!(
                "{p} negative directions among {m} components"
            )));
        }
        let signature = (0..m).map(|a| if a < p { -1 } else { 1 }).collect();
        Self::new(dim, components, signature)
    }

    pub fn euclidean(dim: usize, components: Vec<Scalar>) -> Result<Self> {
        Self::with_negative(dim, components, 0)
    }

    /// `X = (x¹, …, xⁿ)` into `ℝⁿ`.
    pub fn identity(base: Arc<BasePoint>, order: usize) -> Result<Self> {
        let n = base.dim();
        let comps = (0..n)
            .map(|i| {
                Ok(Scalar::Jet(crate::scalar::Jet::coordinate(
                    base.clone(),
                    order,
                    i,
                )?))
            })
            .collect::<Result<_>>()?;
        Self::euclidean(n, comps)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ambient_dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Scalar] {
        &self.components
    }

    pub fn signature(&self) -> &[i8] {
        &self.signature
    }

    /// `∂_iX` as an ambient vector of ħ-constant series.
    pub fn first(&self, i: usize, truncation: usize) -> Result<Vec<HbarSeries>> {
        self.components
            .iter()
            .map(|x| Ok(HbarSeries::constant(truncation, x.partial(i)?)))
            .collect()
    }

    /// `∂_i∂_jX`.
    pub fn second(&self, i: usize, j: usize, truncation: usize) -> Result<Vec<HbarSeries>> {
        self.components
            .iter()
            .map(|x| Ok(HbarSeries::constant(truncation, x.partial(i)?.partial(j)?)))
            .collect()
    }

    /// The sub-embedding made of the listed components.
    pub fn restrict(&self, which: &[usize]) -> Result<Self> {
        Ok(IsometricEmbedding {
            dim: self.dim,
            components: which.iter().map(|&a| self.components[a].clone()).collect(),
            signature: which.iter().map(|&a| self.signature[a]).collect(),
        })
    }
}

/// `Y ⋆_η Z = Σ η_{αα} Y^α ⋆ Z^α`.
pub fn eta_pair(
    star: &StarProduct,
    eta: &[i8],
    y: &[HbarSeries],
    z: &[HbarSeries],
) -> Result<HbarSeries> {
    if y.len() != eta.len() || z.len() != eta.len() {
        return Err(Error::ShapeMismatch(
            "ambient vectors of different lengths".into(),
        ));
    }
    let n = y.first().map_or(0, HbarSeries::truncation);
    let mut acc = HbarSeries::zero(n);
    for ((a, b), &s) in y.iter().zip(z).zip(eta) {
        if a.is_zero() || b.is_zero() {
            continue;
        }
        let p = star.mul(a, b)?;
        acc = if s < 0 { acc.sub(&p)? } else { acc.add(&p)? };
    }
    Ok(acc)
}

/// `g_{ij} = Σ η_{αα} ∂_iX^α ⋆ ∂_jX^α`.
pub fn fluctuation_metric(
    x: &IsometricEmbedding,
    star: &StarProduct,
    truncation: usize,
) -> Result<NcMetric> {
    if star.dim() != x.dim() {
        return Err(Error::ShapeMismatch(format!(
            "star product in dimension {} for a {}-dimensional chart",
            star.dim(),
            x.dim()
        )));
    }
    let n = x.dim();
    let d: Vec<Vec<HbarSeries>> = (0..n)
        .map(|i| x.first(i, truncation))
        .collect::<Result<_>>()?;
    let g = Tensor::try_from_fn(n, 2, |idx| {
        eta_pair(star, x.signature(), &d[idx[0]], &d[idx[1]])
    })?;
    NcMetric::new(g, star.clone())
}

/// `Γ_{ijk} = Σ η ∂_i∂_jX ⋆ ∂_kX`, `Γ̃_{ijk} = Σ η ∂_kX ⋆ ∂_i∂_jX` and `Υ = Γ − Γ̃`.
pub fn embedding_connection_and_chiral(
    x: &IsometricEmbedding,
    g: &NcMetric,
    ginv: &InverseMetric,
) -> Result<(Connection, Chiral)> {
    let n = x.dim();
    let star = g.star();
    let order = g.truncation();
    let d: Vec<Vec<HbarSeries>> = (0..n).map(|i| x.first(i, order)).collect::<Result<_>>()?;
    let dd: Vec<Vec<HbarSeries>> = index_tuples(n, 2)
        .iter()
        .map(|t| x.second(t[0], t[1], order))
        .collect::<Result<_>>()?;
    let eta = x.signature();
    let lower = Tensor::try_from_fn(n, 3, |t| {
        eta_pair(star, eta, &dd[t[0] * n + t[1]], &d[t[2]])
    })?;
    let lower_right = Tensor::try_from_fn(n, 3, |t| {
        eta_pair(star, eta, &d[t[2]], &dd[t[0] * n + t[1]])
    })?;
    let chiral = Chiral::new(Tensor::try_from_fn(n, 3, |t| {
        lower.get(t).sub(lower_right.get(t))
    })?)?;
    let conn = Connection::from_lowered(star, ginv, lower, lower_right)?;
    Ok((conn, chiral))
}

// ---------------------------------------------------------------------------
// Spherically symmetric embeddings

/// Data of a spherically symmetric embedding with `θ^{2l} = −θ^{l2} = λ`.
///
/// Chart coordinates are `(ρ, θ₁, …, θ_{n−1})`; `l` is 1-based.
#[derive(Clone, Debug, PartialEq)]
pub struct SphericalEmbeddingSpec {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub l: usize,
    pub lambda: Rational,
    /// `f¹, …, f^m` as functions of `ρ`.
    pub profiles: Vec<Elementary>,
}

impl SphericalEmbeddingSpec {
    pub fn validate(&self) -> Result<()> {
        let SphericalEmbeddingSpec { n, m, p, l, .. } = *self;
        if n < 3 {
            return Err(Error::InvalidFamily(format!(
                "chart dimension {n} leaves no admissible l"
            )));
        }
        if m < n {
            return Err(Error::InvalidFamily(format!(
                "ambient dimension {m} below chart dimension {n}"
            )));
        }
        if !(3..=n).contains(&l) {
            return Err(Error::InvalidFamily(format!("l = {l} outside [3, {n}]")));
        }
        if self.lambda.is_zero() {
            return Err(Error::InvalidFamily("λ must be nonzero".into()));
        }
        if m - n < p {
            return Err(Error::InvalidFamily(format!(
                "m − n + 1 = {} does not exceed p = {p}",
                m - n + 1
            )));
        }
        if self.profiles.len() != m {
            return Err(Error::InvalidFamily(format!(
                "{} radial profiles for m = {m}",
                self.profiles.len()
            )));
        }
        if self.profiles[m - n] != self.profiles[m - n + 1] {
            return Err(Error::InvalidFamily(format!(
                "f^{} and f^{} must coincide",
                m - n + 1,
                m - n + 2
            )));
        }
        Ok(())
    }

    pub fn theta(&self) -> Result<ThetaMatrix> {
        ThetaMatrix::single(self.n, 1, self.l - 1, self.lambda.clone())
    }

    /// 0-based index `a₀ − 1` of the first component carrying the angular factor.
    pub fn block_start(&self) -> usize {
        self.m - self.n
    }

    pub fn f(&self) -> &Elementary {
        &self.profiles[self.block_start()]
    }

    pub fn embedding(&self, base: Arc<BasePoint>, order: usize) -> Result<IsometricEmbedding> {
        self.validate()?;
        let n = self.n;
        if base.dim() != n {
            return Err(Error::ShapeMismatch(format!(
                "base point of dimension {} for n = {n}",
                base.dim()
            )));
        }
        let rho = AffineArg::coordinate(n, 0);
        let profile = |a: usize| -> Result<Scalar> {
            Ok(Scalar::Jet(jet_of_elementary(
                &self.profiles[a],
                &rho,
                base.clone(),
                order,
            )?))
        };
        let trig = |kind: Elementary, t: usize| -> Result<Scalar> {
            Ok(Scalar::Jet(jet_of_elementary(
                &kind,
                &AffineArg::coordinate(n, t),
                base.clone(),
                order,
            )?))
        };
        let sin: Vec<Scalar> = (1..n)
            .map(|t| trig(Elementary::Sin, t))
            .collect::<Result<_>>()?;
        let cos: Vec<Scalar> = (1..n)
            .map(|t| trig(Elementary::Cos, t))
            .collect::<Result<_>>()?;
        // sin θ_{n−1} ⋯ sin θ_t for t = 1..n, the empty product at t = n.
        let mut tail = vec![Scalar::one(); n + 1];
        for t in (1..n).rev() {
            tail[t] = tail[t + 1].mul(&sin[t - 1])?;
        }
        let a0 = self.block_start();
        let mut comps = Vec::with_capacity(self.m);
        for a in 0..a0 {
            comps.push(profile(a)?);
        }
        comps.push(profile(a0)?.mul(&tail[1])?);
        comps.push(profile(a0 + 1)?.mul(&tail[2])?.mul(&cos[0])?);
        for t in 2..n {
            comps.push(profile(a0 + t)?.mul(&tail[t + 1])?.mul(&cos[t - 1])?);
        }
        IsometricEmbedding::with_negative(n, comps, self.p)
    }
}

/// Factor of a closed-form monomial, evaluated at the base point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Factor {
    /// `f^{(d)}(ρ₀)` of the block profile.
    Profile(usize),
    Sin(usize),
    Cos(usize),
    /// `cosh(λħ)`.
    Cosh,
    /// `sinh(λħ)`.
    Sinh,
}

/// `Σ c · Π factors`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ClosedForm(pub Vec<(Rational, Vec<Factor>)>);

impl ClosedForm {
    pub fn term(c: Rational, factors: Vec<Factor>) -> Self {
        ClosedForm(vec![(c, factors)])
    }

    pub fn plus(mut self, other: ClosedForm) -> Self {
        self.0.extend(other.0);
        self
    }

    pub fn times(&self, factors: &[Factor]) -> Self {
        ClosedForm(
            self.0
                .iter()
                .map(|(c, f)| (c.clone(), f.iter().chain(factors).cloned().collect()))
                .collect(),
        )
    }

    pub fn scaled(&self, r: &Rational) -> Self {
        ClosedForm(self.0.iter().map(|(c, f)| (c * r, f.clone())).collect())
    }
}

/// Values the closed-form factors refer to.
#[derive(Clone, Debug)]
pub struct OracleContext {
    pub base: Arc<BasePoint>,
    pub lambda: Rational,
    /// `f(ρ₀), f'(ρ₀), …`.
    pub profile: Vec<Rational>,
}

fn trig_value(base: &BasePoint, t: usize, sine: bool) -> Result<Rational> {
    let anchor = base
        .anchors()
        .get(t)
        .ok_or_else(|| Error::UnsupportedForm(format!("no chart coordinate {}", t + 1)))?;
    let (s, c) = match anchor {
        Anchor::Angle { sin, cos } => (sin.clone(), cos.clone()),
        Anchor::PiMultiple(_) => {
            let j = jet_of_elementary(
                &Elementary::Sin,
                &AffineArg::coordinate(base.dim(), t),
                Arc::new(base.clone()),
                0,
            )?;
            let k = jet_of_elementary(
                &Elementary::Cos,
                &AffineArg::coordinate(base.dim(), t),
                Arc::new(base.clone()),
                0,
            )?;
            (j.value().clone(), k.value().clone())
        }
        Anchor::Value(v) if v.is_zero() => (Rational::zero(), Rational::one()),
        Anchor::Value(v) => {
            return Err(Error::UnsupportedForm(format!(
                "sin/cos of coordinate {} at the non-angle value {}",
                t + 1,
                rational::format(v)
            )))
        }
    };
    Ok(if sine { s } else { c })
}

/// Exact ħ-series of a closed form at the base point, truncated at `n`.
pub fn closed_form_oracle(form: &ClosedForm, ctx: &OracleContext, n: usize) -> Result<HbarSeries> {
    let ch = constants::cosh(&ctx.lambda, n);
    let sh = constants::sinh(&ctx.lambda, n);
    let mut total = vec![Rational::zero(); n + 1];
    for (c, factors) in &form.0 {
        let mut series = vec![Rational::zero(); n + 1];
        series[0] = c.clone();
        for f in factors {
            match f {
                Factor::Cosh => series = constants::mul(&series, &ch, n),
                Factor::Sinh => series = constants::mul(&series, &sh, n),
                Factor::Profile(d) => {
                    let v = ctx.profile.get(*d).ok_or_else(|| {
                        Error::UnsupportedForm(format!(
                            "profile derivative of order {d} not tabulated"
                        ))
                    })?;
                    series.iter_mut().for_each(|s| *s *= v);
                }
                Factor::Sin(t) | Factor::Cos(t) => {
                    let v = trig_value(&ctx.base, *t, matches!(f, Factor::Sin(_)))?;
                    series.iter_mut().for_each(|s| *s *= &v);
                }
            }
        }
        for (t, s) in total.iter_mut().zip(series) {
            *t += s;
        }
    }
    Ok(HbarSeries::from_rationals(n, &total))
}

/// Closed forms of the `(a₀, a₀) + (a₀+1, a₀+1)` block of every `g_{ij}`, 0-based `[i][j]`.
pub fn spherical_closed_forms(spec: &SphericalEmbeddingSpec) -> Vec<Vec<ClosedForm>> {
    use Factor::*;
    let n = spec.n;
    let big_l = spec.l - 1;
    let one = Rational::one;
    // Π_{t ∈ [2, n−1], t ≠ L} of sin²θ_t, with per-angle overrides.
    let angular = |special: &[(usize, Vec<Factor>)]| -> Vec<Factor> {
        let mut out = Vec::new();
        for t in 2..n {
            if t == big_l {
                continue;
            }
            match special.iter().find(|(s, _)| *s == t) {
                Some((_, f)) => out.extend(f.iter().cloned()),
                None => out.extend([Sin(t), Sin(t)]),
            }
        }
        out
    };
    let a_form = ClosedForm::term(one(), vec![Sin(big_l), Sin(big_l), Cosh, Cosh]).plus(
        ClosedForm::term(-one(), vec![Cos(big_l), Cos(big_l), Sinh, Sinh]),
    );
    let one_plus_two_sh2 =
        ClosedForm::term(one(), vec![]).plus(ClosedForm::term(rational::int(2), vec![Sinh, Sinh]));
    let ff = [Profile(0), Profile(0)];
    let ffp = [Profile(0), Profile(1)];
    let fpfp = [Profile(1), Profile(1)];
    let p = angular(&[]);
    let sl_cl = [Sin(big_l), Cos(big_l)];

    let mut out = vec![vec![ClosedForm::default(); n]; n];
    let set = |out: &mut Vec<Vec<ClosedForm>>, i: usize, j: usize, f: ClosedForm, sign: i64| {
        out[j][i] = f.scaled(&rational::int(sign));
        out[i][j] = f;
    };
    out[0][0] = a_form.times(&fpfp).times(&p);
    set(
        &mut out,
        0,
        1,
        ClosedForm::term(rational::int(2), vec![Cosh, Sinh])
            .times(&ffp)
            .times(&p)
            .times(&sl_cl),
        -1,
    );
    set(
        &mut out,
        0,
        big_l,
        one_plus_two_sh2.times(&ffp).times(&p).times(&sl_cl),
        1,
    );
    out[1][1] = a_form.times(&ff).times(&p);
    set(
        &mut out,
        1,
        big_l,
        ClosedForm::term(one(), vec![Sin(big_l), Sin(big_l)])
            .plus(ClosedForm::term(-one(), vec![Cos(big_l), Cos(big_l)]))
            .times(&[Cosh, Sinh])
            .times(&ff)
            .times(&p),
        -1,
    );
    out[big_l][big_l] = ClosedForm::term(one(), vec![Cos(big_l), Cos(big_l), Cosh, Cosh])
        .plus(ClosedForm::term(
            -one(),
            vec![Sin(big_l), Sin(big_l), Sinh, Sinh],
        ))
        .times(&ff)
        .times(&p);
    let others: Vec<usize> = (2..n).filter(|&k| k != big_l).collect();
    for &k in &others {
        let pk = angular(&[(k, vec![Sin(k), Cos(k)])]);
        set(&mut out, 0, k, a_form.times(&ffp).times(&pk), 1);
        set(
            &mut out,
            1,
            k,
            ClosedForm::term(rational::int(-2), vec![Cosh, Sinh])
                .times(&ff)
                .times(&pk)
                .times(&sl_cl),
            -1,
        );
        set(
            &mut out,
            big_l,
            k,
            one_plus_two_sh2.times(&ff).times(&pk).times(&sl_cl),
            1,
        );
        out[k][k] = a_form
            .times(&ff)
            .times(&angular(&[(k, vec![Cos(k), Cos(k)])]));
    }
    for (a, &i) in others.iter().enumerate() {
        for &j in &others[a + 1..] {
            let pij = angular(&[(i, vec![Sin(i), Cos(i)]), (j, vec![Sin(j), Cos(j)])]);
            set(&mut out, i, j, a_form.times(&ff).times(&pij), 1);
        }
    }
    out
}

/// Output of the spherical generator.
#[derive(Clone, Debug)]
pub struct SphericalFluctuation {
    pub spec: SphericalEmbeddingSpec,
    pub embedding: IsometricEmbedding,
    pub metric: NcMetric,
    /// Contribution of the two components carrying `θ₁`.
    pub block: Tensor,
    /// Closed-form expansions of `block` at the base point.
    pub closed_form: Tensor,
}

pub fn spherical_fluctuation(
    spec: &SphericalEmbeddingSpec,
    base: Arc<BasePoint>,
    truncation: usize,
    jet_order: usize,
) -> Result<SphericalFluctuation> {
    spec.validate()?;
    let star = StarProduct::moyal(spec.theta()?);
    let embedding = spec.embedding(base.clone(), jet_order)?;
    let metric = fluctuation_metric(&embedding, &star, truncation)?;
    let a0 = spec.block_start();
    let block = fluctuation_metric(&embedding.restrict(&[a0, a0 + 1])?, &star, truncation)?
        .tensor()
        .clone();
    let profile_jet =
        jet_of_elementary(spec.f(), &AffineArg::coordinate(spec.n, 0), base.clone(), 2)?;
    let mut e = vec![0; spec.n];
    let mut profile = vec![profile_jet.value().clone()];
    for d in 1..=profile_jet.order() {
        e[0] = d;
        profile.push(profile_jet.coeff(&e) * Rational::from_integer(rational::factorial(d)));
    }
    let ctx = OracleContext {
        base,
        lambda: spec.lambda.clone(),
        profile,
    };
    let forms = spherical_closed_forms(spec);
    let closed_form = Tensor::try_from_fn(spec.n, 2, |t| {
        closed_form_oracle(&forms[t[0]][t[1]], &ctx, truncation)
    })?;
    Ok(SphericalFluctuation {
        spec: spec.clone(),
        embedding,
        metric,
        block,
        closed_form,
    })
}

impl SphericalFluctuation {
    /// Block values against the closed forms, and the remainder `g − block` free of ħ.
    pub fn check_closed_form(&self) -> Result<Outcome> {
        for (idx, b) in self.block.entries() {
            let expected = self.closed_form.get(&idx);
            for q in 0..=b.truncation() {
                let got = b.at(q).value();
                let want = expected.at(q).value();
                if got != want {
                    return Ok(Outcome::fail(
                        format!(
                            "g_{} block differs from its closed form at ħ^{q}",
                            label(&idx)
                        ),
                        json!({"indices": idx.iter().map(|i| i + 1).collect::<Vec<_>>(), "order": q,
                               "engine": rational::format(got), "closed_form": rational::format(want)}),
                    ));
                }
            }
        }
        for (idx, g) in self.metric.tensor().entries() {
            let rest = g.sub(self.block.get(&idx))?;
            for q in 1..=rest.truncation() {
                if !rest.at(q).is_zero() {
                    return Ok(Outcome::fail(
                        format!(
                            "g_{} has a quantum correction outside the θ₁ block at ħ^{q}",
                            label(&idx)
                        ),
                        json!({"indices": idx.iter().map(|i| i + 1).collect::<Vec<_>>(), "order": q}),
                    ));
                }
            }
        }
        Ok(Outcome::pass(format!(
            "all {} metric components match their closed forms through ħ^{}",
            self.block.entries().count(),
            self.metric.truncation()
        )))
    }

    /// `g_{2k} = −g_{k2}` for `k ≠ 2`, every other pair symmetric.
    pub fn check_symmetry_pattern(&self) -> Result<Outcome> {
        let n = self.spec.n;
        for i in 0..n {
            for j in i + 1..n {
                let a = self.metric.get(i, j);
                let b = self.metric.get(j, i);
                let (expected, what) = if i == 1 || j == 1 {
                    (b.neg(), "antisymmetric")
                } else {
                    (b.clone(), "symmetric")
                };
                if let Some(q) = a.first_difference(&expected)? {
                    return Ok(Outcome::fail(
                        format!(
                            "g_{}{} and g_{}{} are not {what} at ħ^{q}",
                            i + 1,
                            j + 1,
                            j + 1,
                            i + 1
                        ),
                        json!({"i": i + 1, "j": j + 1, "order": q}),
                    ));
                }
            }
        }
        Ok(Outcome::pass(
            "g_2k = −g_k2 for k ≠ 2; all other pairs symmetric",
        ))
    }
}

/// `∂/∂θ₁` of every coefficient vanishes wherever budget remains.
pub fn check_theta1_independence(arrays: &[(&str, &Tensor)]) -> Result<Outcome> {
    for (name, t) in arrays {
        for (idx, s) in t.entries() {
            for (q, c) in s.coeffs().iter().enumerate() {
                if matches!(c, Scalar::Jet(j) if j.order() == 0) {
                    continue;
                }
                if !c.partial(1)?.is_zero() {
                    return Ok(Outcome::fail(
                        format!("∂/∂θ₁ of {name}_{} is nonzero at ħ^{q}", label(&idx)),
                        json!({"array": name, "indices": idx.iter().map(|i| i + 1).collect::<Vec<_>>(), "order": q}),
                    ));
                }
            }
        }
    }
    Ok(Outcome::pass(format!(
        "{} independent of θ₁",
        arrays
            .iter()
            .map(|(n, _)| *n)
            .collect::<Vec<_>>()
            .join(", ")
    )))
}

// ---------------------------------------------------------------------------
// Classical oracle

/// Levi-Civita data of a commutative metric, as jets at the base point.
#[derive(Clone, Debug)]
pub struct ClassicalGeometry {
    pub metric: Vec<Vec<Scalar>>,
    /// `Γ_{ijk}` at `[i][j][k]`.
    pub lowered: Vec<Vec<Vec<Scalar>>>,
    /// `Γ^k_{ij}` at `[i][j][k]`.
    pub christoffel: Vec<Vec<Vec<Scalar>>>,
    /// `R_{lkij}` at `[l][k][i][j]`.
    pub riemann: Vec<Vec<Vec<Vec<Scalar>>>>,
}

/// Pullback metric `Σ η ∂_iX^α ∂_jX^α` with pointwise products.
pub fn classical_metric(x: &IsometricEmbedding) -> Result<Vec<Vec<Scalar>>> {
    let n = x.dim();
    let d: Vec<Vec<Scalar>> = (0..n)
        .map(|i| {
            x.components()
                .iter()
                .map(|c| c.partial(i))
                .collect::<Result<_>>()
        })
        .collect::<Result<_>>()?;
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let mut acc = Scalar::zero();
                    for (a, &s) in x.signature().iter().enumerate() {
                        let p = d[i][a].mul(&d[j][a])?;
                        acc = if s < 0 { acc.sub(&p)? } else { acc.add(&p)? };
                    }
                    Ok(acc)
                })
                .collect()
        })
        .collect()
}

/// `Γ_{ijk} = ½(∂_ig_{jk} + ∂_jg_{ik} − ∂_kg_{ij})`, `Γ^k_{ij} = Γ_{ijl}g^{lk}`,
/// `R^m_{kij} = ∂_iΓ^m_{jk} − ∂_jΓ^m_{ik} + Γ^p_{jk}Γ^m_{ip} − Γ^p_{ik}Γ^m_{jp}`, `R_{lkij} = R^m_{kij}g_{ml}`.
pub fn classical_geometry(g: &[Vec<Scalar>]) -> Result<ClassicalGeometry> {
    let n = g.len();
    let ginv = pointwise_inverse(g)?;
    let half = frac(1, 2);
    let dg = |k: usize, i: usize, j: usize| g[i][j].partial(k);
    let mut lowered = vec![vec![vec![Scalar::zero(); n]; n]; n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                lowered[i][j][k] = dg(i, j, k)?
                    .add(&dg(j, i, k)?)?
                    .sub(&dg(k, i, j)?)?
                    .scale(&half);
            }
        }
    }
    let mut christoffel = vec![vec![vec![Scalar::zero(); n]; n]; n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut acc = Scalar::zero();
                for l in 0..n {
                    acc = acc.add(&lowered[i][j][l].mul(&ginv[l][k])?)?;
                }
                christoffel[i][j][k] = acc;
            }
        }
    }
    let gamma = |m: usize, i: usize, j: usize| &christoffel[i][j][m];
    let mut upper = vec![vec![vec![vec![Scalar::zero(); n]; n]; n]; n];
    for m in 0..n {
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut acc = gamma(m, j, k)
                        .partial(i)?
                        .sub(&gamma(m, i, k).partial(j)?)?;
                    for p in 0..n {
                        acc = acc.add(&gamma(p, j, k).mul(gamma(m, i, p))?)?;
                        acc = acc.sub(&gamma(p, i, k).mul(gamma(m, j, p))?)?;
                    }
                    upper[m][k][i][j] = acc;
                }
            }
        }
    }
    let mut riemann = vec![vec![vec![vec![Scalar::zero(); n]; n]; n]; n];
    for l in 0..n {
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut acc = Scalar::zero();
                    for m in 0..n {
                        acc = acc.add(&upper[m][k][i][j].mul(&g[m][l])?)?;
                    }
                    riemann[l][k][i][j] = acc;
                }
            }
        }
    }
    Ok(ClassicalGeometry {
        metric: g.to_vec(),
        lowered,
        christoffel,
        riemann,
    })
}

/// `ħ⁰` layers of `Γ_{ijk}`, `Γ^k_{ij}` and `R_{lkij}` against the classical oracle at the base point.
pub fn check_classical_limit(
    conn: &Connection,
    riemann: &Tensor,
    classical: &ClassicalGeometry,
) -> Result<Outcome> {
    let n = conn.dim();
    let fail = |what: &str, idx: &[usize], got: &Rational, want: &Rational| {
        Outcome::fail(
            format!(
                "ħ⁰ layer of {what}_{} differs from the classical value",
                label(idx)
            ),
            json!({"indices": idx.iter().map(|i| i + 1).collect::<Vec<_>>(),
                   "engine": rational::format(got), "classical": rational::format(want)}),
        )
    };
    for t in index_tuples(n, 3) {
        let (i, j, k) = (t[0], t[1], t[2]);
        for (what, got, want) in [
            (
                "Γ",
                conn.lower.get(&t).at(0).value(),
                classical.lowered[i][j][k].value(),
            ),
            (
                "Γ̃",
                conn.lower_right.get(&t).at(0).value(),
                classical.lowered[i][j][k].value(),
            ),
            (
                "Γ^",
                conn.gamma(k, i, j).at(0).value(),
                classical.christoffel[i][j][k].value(),
            ),
        ] {
            if got != want {
                return Ok(fail(what, &t, got, want));
            }
        }
    }
    for t in index_tuples(n, 4) {
        let got = riemann.get(&t).at(0).value();
        let want = classical.riemann[t[0]][t[1]][t[2]][t[3]].value();
        if got != want {
            return Ok(fail("R", &t, got, want));
        }
    }
    Ok(Outcome::pass(
        "ħ⁰ connection and curvature equal the classical Levi-Civita values",
    ))
}

/// Round unit sphere `(sin θ cos φ, sin θ sin φ, cos θ)` on the chart `(θ, φ)`.
pub fn round_sphere(base: Arc<BasePoint>, order: usize) -> Result<IsometricEmbedding> {
    let trig = |kind: Elementary, t: usize| -> Result<Scalar> {
        Ok(Scalar::Jet(jet_of_elementary(
            &kind,
            &AffineArg::coordinate(2, t),
            base.clone(),
            order,
        )?))
    };
    let (st, ct) = (trig(Elementary::Sin, 0)?, trig(Elementary::Cos, 0)?);
    let (sp, cp) = (trig(Elementary::Sin, 1)?, trig(Elementary::Cos, 1)?);
    IsometricEmbedding::euclidean(2, vec![st.mul(&cp)?, st.mul(&sp)?, ct])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    fn angle(s: i64, c: i64, d: i64) -> Anchor {
        Anchor::angle(frac(s, d), frac(c, d)).unwrap()
    }

    fn linear_profile() -> Elementary {
        Elementary::Polynomial(vec![int(0), int(1)])
    }

    fn spec(n: usize, l: usize) -> SphericalEmbeddingSpec {
        SphericalEmbeddingSpec {
            n,
            m: n + 1,
            p: 0,
            l,
            lambda: int(1),
            profiles: vec![linear_profile(); n + 1],
        }
    }

    #[test]
    fn identity_embedding_is_flat() {
        let base = Arc::new(BasePoint::rational(&[frac(1, 2), int(2)]));
        let x = IsometricEmbedding::identity(base, 6).unwrap();
        let star = StarProduct::moyal(ThetaMatrix::single(2, 0, 1, int(1)).unwrap());
        let g = fluctuation_metric(&x, &star, 3).unwrap();
        assert_eq!(
            g.tensor()
                .first_difference(&crate::metric::identity(2, 3))
                .unwrap(),
            None
        );
        let inv = g.star_inverse().unwrap();
        let (conn, chiral) = embedding_connection_and_chiral(&x, &g, &inv).unwrap();
        assert!(conn.lower.is_zero() && conn.lower_right.is_zero() && chiral.tensor().is_zero());
    }

    #[test]
    fn spec_validation() {
        assert!(spec(3, 3).validate().is_ok());
        assert!(matches!(
            spec(3, 2).validate(),
            Err(Error::InvalidFamily(_))
        ));
        let mut s = spec(3, 3);
        s.lambda = int(0);
        assert!(matches!(s.validate(), Err(Error::InvalidFamily(_))));
        let mut s = spec(3, 3);
        s.p = 2;
        assert!(matches!(s.validate(), Err(Error::InvalidFamily(_))));
        let mut s = spec(3, 3);
        s.profiles[2] = Elementary::Polynomial(vec![int(1), int(1)]);
        assert!(matches!(s.validate(), Err(Error::InvalidFamily(_))));
    }

    #[test]
    fn hyperbolic_products() {
        let ctx = OracleContext {
            base: Arc::new(BasePoint::origin(1)),
            lambda: int(1),
            profile: vec![],
        };
        let series = |f: Vec<Factor>, n| {
            closed_form_oracle(&ClosedForm::term(int(1), f), &ctx, n)
                .unwrap()
                .values()
        };
        assert_eq!(
            series(vec![Factor::Cosh, Factor::Cosh], 4),
            vec![int(1), int(0), int(1), int(0), frac(1, 3)]
        );
        assert_eq!(
            series(vec![Factor::Sinh, Factor::Sinh], 4),
            vec![int(0), int(0), int(1), int(0), frac(1, 3)]
        );
        assert_eq!(
            series(vec![Factor::Cosh, Factor::Sinh], 3),
            vec![int(0), int(1), int(0), frac(2, 3)]
        );
    }

    #[test]
    fn unsupported_factor() {
        let ctx = OracleContext {
            base: Arc::new(BasePoint::rational(&[int(2)])),
            lambda: int(1),
            profile: vec![],
        };
        let r = closed_form_oracle(&ClosedForm::term(int(1), vec![Factor::Sin(0)]), &ctx, 2);
        assert!(matches!(r, Err(Error::UnsupportedForm(_))));
        let r = closed_form_oracle(&ClosedForm::term(int(1), vec![Factor::Profile(3)]), &ctx, 2);
        assert!(matches!(r, Err(Error::UnsupportedForm(_))));
    }

    #[test]
    fn spherical_three_dimensional() {
        let base = Arc::new(BasePoint::new(vec![
            Anchor::value(int(2)),
            angle(3, 4, 5),
            angle(5, 12, 13),
        ]));
        let s = spherical_fluctuation(&spec(3, 3), base, 4, 6).unwrap();
        assert!(s.check_closed_form().unwrap().passed);
        assert!(s.check_symmetry_pattern().unwrap().passed);
        assert!(
            check_theta1_independence(&[("g", s.metric.tensor())])
                .unwrap()
                .passed
        );
    }

    #[test]
    fn spherical_four_dimensional() {
        let base = Arc::new(BasePoint::new(vec![
            Anchor::value(frac(3, 2)),
            angle(3, 4, 5),
            angle(5, 12, 13),
            angle(8, 15, 17),
        ]));
        for l in [3, 4] {
            let s = spherical_fluctuation(&spec(4, l), base.clone(), 3, 4).unwrap();
            let c = s.check_closed_form().unwrap();
            assert!(c.passed, "l = {l}: {}", c.details);
            assert!(s.check_symmetry_pattern().unwrap().passed);
        }
    }

    #[test]
    fn classical_round_sphere() {
        let base = Arc::new(BasePoint::new(vec![angle(3, 4, 5), angle(5, 12, 13)]));
        let x = round_sphere(base, 4).unwrap();
        let g = classical_metric(&x).unwrap();
        assert_eq!(g[0][0].value(), &int(1));
        assert_eq!(g[1][1].value(), &frac(9, 25));
        let c = classical_geometry(&g).unwrap();
        // Γ^θ_φφ = −sin θ cos θ, Γ^φ_θφ = cot θ, R_θφθφ = sin²θ.
        assert_eq!(c.christoffel[1][1][0].value(), &frac(-12, 25));
        assert_eq!(c.christoffel[0][1][1].value(), &frac(4, 3));
        assert_eq!(c.riemann[0][1][0][1].value(), &frac(9, 25));
    }
}

//! Declarative scenario files (JSON) and their validation.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::embedding::{IsometricEmbedding, SphericalEmbeddingSpec};
use crate::error::{Error, Result};
use crate::expr;
use crate::rational::{self, Rational};
use crate::scalar::{Anchor, BasePoint, Elementary, Jet, Scalar};
use crate::series::HbarSeries;
use crate::star::{BidiffOperator, BidiffTerm, GeneralStar, StarProduct, ThetaMatrix};
use crate::tensor::Tensor;

/// Environment variable overriding the default jet order.
pub const JET_ORDER_ENV: &str = "NCGEOM_JET_ORDER";

/// Default jet order for truncation `n`, honouring [`JET_ORDER_ENV`].
pub fn default_jet_order(n: usize) -> Result<usize> {
    match std::env::var(JET_ORDER_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::Validation(format!("{JET_ORDER_ENV}={v:?} is not a non-negative integer"))),
        Err(_) => Ok(n + 5),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Chart {
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub coordinates: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ThetaSpec {
    Matrix {
        matrix: Vec<Vec<String>>,
    },
    /// `θ^{2l} = −θ^{l2} = λ`, 1-based.
    Shorthand {
        #[serde(with = "rational::serde_str")]
        lambda: Rational,
        l: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    #[serde(with = "rational::serde_str")]
    pub coeff: Rational,
    pub left: Vec<usize>,
    pub right: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StarSpec {
    Moyal,
    /// `B_1, B_2, …` as term lists.
    General(Vec<Vec<TermSpec>>),
    /// `B_q = (c^{ij}∂_i⊗∂_j)^q/q!` for `q ≤ orders`.
    Exponential { matrix: Vec<Vec<String>>, orders: usize },
}

/// One embedding component: an expression string or an explicit jet.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComponentSpec {
    Expr(String),
    Jet(Jet),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingSpec {
    pub components: Vec<ComponentSpec>,
    /// `±1` per component; all `+1` when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signature: Option<Vec<i8>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileSpec {
    Sin,
    Cos,
    Sinh,
    Cosh,
    Exp,
    Polynomial(Vec<String>),
    Derivatives(Vec<String>),
}

impl ProfileSpec {
    fn elementary(&self) -> Result<Elementary> {
        let parse = |v: &[String]| v.iter().map(|s| rational::parse(s)).collect::<Result<Vec<_>>>();
        Ok(match self {
            ProfileSpec::Sin => Elementary::Sin,
            ProfileSpec::Cos => Elementary::Cos,
            ProfileSpec::Sinh => Elementary::Sinh,
            ProfileSpec::Cosh => Elementary::Cosh,
            ProfileSpec::Exp => Elementary::Exp,
            ProfileSpec::Polynomial(c) => Elementary::Polynomial(parse(c)?),
            ProfileSpec::Derivatives(c) => Elementary::DerivativeTable(parse(c)?),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SphericalSpec {
    pub m: usize,
    #[serde(default)]
    pub p: usize,
    pub l: usize,
    #[serde(with = "rational::serde_str")]
    pub lambda: Rational,
    pub profiles: Vec<ProfileSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricSpec {
    /// Full matrix of series `[[g_11, g_12, …], …]`.
    ConstantSeries(Vec<Vec<HbarSeries>>),
    Embedding(EmbeddingSpec),
    Spherical(SphericalSpec),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChiralEntry {
    /// 1-based `(i, j, k)`; the `(j, i, k)` entry is filled in.
    pub index: [usize; 3],
    pub series: HbarSeries,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChiralSpec {
    Zero,
    Embedding,
    Explicit(Vec<ChiralEntry>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    Pass,
    Fail,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CheckSpec {
    Id(String),
    Annotated { id: String, expect: Expectation },
}

impl CheckSpec {
    pub fn id(&self) -> &str {
        match self {
            CheckSpec::Id(id) | CheckSpec::Annotated { id, .. } => id,
        }
    }

    pub fn expect(&self) -> Expectation {
        match self {
            CheckSpec::Id(_) => Expectation::Pass,
            CheckSpec::Annotated { expect, .. } => *expect,
        }
    }
}

/// A value the run must reproduce, compared coefficientwise at the base point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpectedValue {
    pub quantity: String,
    /// 1-based indices.
    #[serde(default)]
    pub index: Vec<usize>,
    #[serde(with = "rational::serde_str_vec")]
    pub series: Vec<Rational>,
    /// Highest order compared; the truncation when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub through: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AppendixSpec {
    pub order: usize,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub chart: Chart,
    pub truncation: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jet_order: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub base_point: Vec<Anchor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<ThetaSpec>,
    #[serde(default = "moyal")]
    pub star: StarSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<MetricSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chiral: Option<ChiralSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub appendix: Option<AppendixSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub expected: Vec<ExpectedValue>,
    #[serde(default)]
    pub checks: Vec<CheckSpec>,
    #[serde(default)]
    pub seed: u64,
}

fn moyal() -> StarSpec {
    StarSpec::Moyal
}

fn rational_matrix(m: &[Vec<String>], n: usize, what: &str) -> Result<Vec<Vec<Rational>>> {
    if m.len() != n || m.iter().any(|r| r.len() != n) {
        return Err(Error::Validation(format!("{what} is not {n}×{n}")));
    }
    m.iter()
        .map(|r| r.iter().map(|s| rational::parse(s)).collect())
        .collect()
}

const BUILTINS: &[(&str, &str)] = &[
    ("example-1", include_str!("../scenarios/example-1.json")),
    ("example-2", include_str!("../scenarios/example-2.json")),
    ("appendix-a", include_str!("../scenarios/appendix-a.json")),
    ("sphere-classical-limit", include_str!("../scenarios/sphere-classical-limit.json")),
    ("spherical-theorem", include_str!("../scenarios/spherical-theorem.json")),
    ("quasi-moyal-crosscheck", include_str!("../scenarios/quasi-moyal-crosscheck.json")),
];

pub fn builtin_names() -> impl Iterator<Item = &'static str> {
    BUILTINS.iter().map(|(n, _)| *n)
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn builtin(name: &str) -> Result<Self> {
        let (_, text) = BUILTINS
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| Error::Parse(format!("no built-in scenario {name:?}")))?;
        Self::from_json(text)
    }

    /// A file path, or `builtin:NAME`.
    pub fn load(source: &str) -> Result<Self> {
        if let Some(name) = source.strip_prefix("builtin:") {
            return Self::builtin(name);
        }
        let text = std::fs::read_to_string(Path::new(source)).map_err(|e| Error::Io(format!("{source}: {e}")))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.chart.dim;
        if n == 0 {
            return Err(Error::Validation("chart dimension must be positive".into()));
        }
        if !self.chart.coordinates.is_empty() && self.chart.coordinates.len() != n {
            return Err(Error::Validation(format!("{} coordinate names for dimension {n}", self.chart.coordinates.len())));
        }
        if !self.base_point.is_empty() && self.base_point.len() != n {
            return Err(Error::Validation(format!("base point of dimension {} for dimension {n}", self.base_point.len())));
        }
        self.theta()?;
        self.star()?;
        for c in &self.checks {
            if !crate::runner::CHECKS.iter().any(|(id, _)| *id == c.id()) {
                return Err(Error::Validation(format!("unknown check {:?}", c.id())));
            }
        }
        if let Some(ChiralSpec::Explicit(entries)) = &self.chiral {
            for e in entries {
                if e.index.iter().any(|&i| i == 0 || i > n) {
                    return Err(Error::Validation(format!("chiral index {:?} outside 1..={n}", e.index)));
                }
            }
        }
        if let Some(MetricSpec::ConstantSeries(rows)) = &self.metric {
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(Error::Validation(format!("metric is not {n}×{n}")));
            }
        }
        for e in &self.expected {
            if e.index.iter().any(|&i| i == 0 || i > n) {
                return Err(Error::Validation(format!("expected index {:?} outside 1..={n}", e.index)));
            }
        }
        Ok(())
    }

    pub fn coordinate_names(&self) -> Vec<String> {
        if self.chart.coordinates.is_empty() {
            expr::default_names(self.chart.dim)
        } else {
            self.chart.coordinates.clone()
        }
    }

    pub fn jet_order(&self) -> Result<usize> {
        match self.jet_order {
            Some(m) => Ok(m),
            None => default_jet_order(self.truncation),
        }
    }

    pub fn base(&self) -> Arc<BasePoint> {
        if self.base_point.is_empty() {
            Arc::new(BasePoint::origin(self.chart.dim))
        } else {
            Arc::new(BasePoint::new(self.base_point.clone()))
        }
    }

    /// Skew-symmetry is enforced here; a spherical metric source fixes its own θ.
    pub fn theta(&self) -> Result<ThetaMatrix> {
        let n = self.chart.dim;
        if let Some(MetricSpec::Spherical(s)) = &self.metric {
            return self.spherical_spec(s)?.theta().map_err(|e| Error::Validation(e.to_string()));
        }
        match &self.theta {
            None => Ok(ThetaMatrix::zero(n)),
            Some(ThetaSpec::Matrix { matrix }) => {
                let m = rational_matrix(matrix, n, "theta")?;
                ThetaMatrix::new(m).map_err(|e| Error::Validation(e.to_string()))
            }
            Some(ThetaSpec::Shorthand { lambda, l }) => {
                if *l < 1 || *l > n || *l == 2 || n < 2 {
                    return Err(Error::Validation(format!("theta shorthand l = {l} invalid for dimension {n}")));
                }
                ThetaMatrix::single(n, 1, l - 1, lambda.clone()).map_err(|e| Error::Validation(e.to_string()))
            }
        }
    }

    pub fn star(&self) -> Result<StarProduct> {
        let n = self.chart.dim;
        Ok(match &self.star {
            StarSpec::Moyal => StarProduct::moyal(self.theta()?),
            StarSpec::General(orders) => {
                let ops = orders
                    .iter()
                    .map(|terms| BidiffOperator {
                        terms: terms
                            .iter()
                            .map(|t| BidiffTerm {
                                coeff: Scalar::Constant(t.coeff.clone()),
                                left: t.left.clone(),
                                right: t.right.clone(),
                            })
                            .collect(),
                    })
                    .collect();
                StarProduct::General(GeneralStar::new(n, ops).map_err(|e| Error::Validation(e.to_string()))?)
            }
            StarSpec::Exponential { matrix, orders } => StarProduct::General(
                GeneralStar::exponential(rational_matrix(matrix, n, "exponential matrix")?, *orders)
                    .map_err(|e| Error::Validation(e.to_string()))?,
            ),
        })
    }

    pub fn spherical_spec(&self, s: &SphericalSpec) -> Result<SphericalEmbeddingSpec> {
        let spec = SphericalEmbeddingSpec {
            n: self.chart.dim,
            m: s.m,
            p: s.p,
            l: s.l,
            lambda: s.lambda.clone(),
            profiles: s.profiles.iter().map(ProfileSpec::elementary).collect::<Result<_>>()?,
        };
        spec.validate().map_err(|e| Error::Validation(e.to_string()))?;
        Ok(spec)
    }

    /// The embedding behind an `embedding` or `spherical` metric source.
    pub fn embedding(&self) -> Result<Option<IsometricEmbedding>> {
        let order = self.jet_order()?;
        let base = self.base();
        match &self.metric {
            Some(MetricSpec::Embedding(e)) => {
                let names = self.coordinate_names();
                let comps = e
                    .components
                    .iter()
                    .map(|c| match c {
                        ComponentSpec::Expr(s) => Ok(Scalar::Jet(expr::parse(s, &names)?.jet(&base, order)?)),
                        ComponentSpec::Jet(j) => Ok(Scalar::Jet(j.clone())),
                    })
                    .collect::<Result<Vec<_>>>()?;
                let sig = e.signature.clone().unwrap_or_else(|| vec![1; comps.len()]);
                Ok(Some(IsometricEmbedding::new(self.chart.dim, comps, sig)?))
            }
            Some(MetricSpec::Spherical(s)) => Ok(Some(self.spherical_spec(s)?.embedding(base, order)?)),
            _ => Ok(None),
        }
    }

    /// Explicit metric entries, padded to the truncation.
    pub fn constant_metric(&self) -> Option<Tensor> {
        let Some(MetricSpec::ConstantSeries(rows)) = &self.metric else {
            return None;
        };
        let n = self.chart.dim;
        let mut t = Tensor::zeros(n, 2, self.truncation);
        for (i, row) in rows.iter().enumerate() {
            for (j, s) in row.iter().enumerate() {
                t.set(&[i, j], pad(s, self.truncation));
            }
        }
        Some(t)
    }

    pub fn explicit_chiral(&self) -> Option<Tensor> {
        let Some(ChiralSpec::Explicit(entries)) = &self.chiral else {
            return None;
        };
        let mut t = Tensor::zeros(self.chart.dim, 3, self.truncation);
        for e in entries {
            let [i, j, k] = e.index.map(|v| v - 1);
            let s = pad(&e.series, self.truncation);
            t.set(&[i, j, k], s.clone());
            t.set(&[j, i, k], s);
        }
        Some(t)
    }

    /// Chiral source, defaulting to the embedding when the metric comes from one.
    pub fn chiral_source(&self) -> ChiralSpec {
        match (&self.chiral, &self.metric) {
            (Some(c), _) => c.clone(),
            (None, Some(MetricSpec::Embedding(_) | MetricSpec::Spherical(_))) => ChiralSpec::Embedding,
            _ => ChiralSpec::Zero,
        }
    }
}

fn pad(s: &HbarSeries, n: usize) -> HbarSeries {
    HbarSeries::from_coeffs(n, s.coeffs().iter().cloned())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal(theta: &str) -> String {
        format!(
            r#"{{"name": "t", "chart": {{"dim": 2}}, "truncation": 2,
                "theta": {theta},
                "metric": {{"constant_series": [[["1"], ["0"]], [["0"], ["1"]]]}},
                "checks": ["first-bianchi"]}}"#
        )
    }

    #[test]
    fn non_skew_theta_is_rejected() {
        let err = Scenario::from_json(&minimal(r#"{"matrix": [["1", "0"], ["0", "0"]]}"#)).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
        let ok = Scenario::from_json(&minimal(r#"{"matrix": [["0", "1/2"], ["-1/2", "0"]]}"#)).unwrap();
        assert_eq!(ok.theta().unwrap().get(0, 1), &rational::frac(1, 2));
    }

    #[test]
    fn malformed_and_unknown() {
        assert!(matches!(Scenario::from_json("{").unwrap_err(), Error::Parse(_)));
        let text = minimal(r#"{"matrix": [["0", "1"], ["-1", "0"]]}"#).replace("first-bianchi", "no-such-check");
        assert!(matches!(Scenario::from_json(&text).unwrap_err(), Error::Validation(_)));
    }

    #[test]
    fn builtins_parse() {
        for name in builtin_names() {
            Scenario::builtin(name).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
        assert!(Scenario::load("builtin:nope").is_err());
    }

    #[test]
    fn serde_round_trip() {
        let s = Scenario::builtin("example-1").unwrap();
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(Scenario::from_json(&text).unwrap(), s);
    }

    #[test]
    fn metric_padding() {
        let s = Scenario::from_json(&minimal(r#"{"matrix": [["0", "1"], ["-1", "0"]]}"#)).unwrap();
        let g = s.constant_metric().unwrap();
        assert_eq!(g.truncation(), 2);
        assert_eq!(g.get(&[0, 0]), &HbarSeries::one(2));
    }
}

//! JSON encodings of inputs and reports. Complex numbers are `[re, im]` pairs and matrices
//! are row-major lists of rows.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bundle::CMat;
use crate::error::Result;
use crate::inner::{make_polynomial, make_rational_inner, Factor, Mode, RationalInner};
use crate::poly::BiPoly;
use crate::reduce::{ReducibilityReport, StrictReducibilityReport};
use crate::scalar::{Real, C};

/// `{"coeffs": [[[re, im], ...], ...]}`; row index is the power of `z`, column index the
/// power of `w`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolyJson {
    pub coeffs: Vec<Vec<[f64; 2]>>,
}

impl PolyJson {
    pub fn to_poly(&self) -> BiPoly<f64> {
        BiPoly::from_rows(
            self.coeffs
                .iter()
                .map(|row| row.iter().map(|c| C::new(c[0], c[1])).collect())
                .collect(),
        )
    }

    pub fn from_poly<T: Real>(p: &BiPoly<T>) -> Self {
        Self {
            coeffs: p
                .rows()
                .iter()
                .map(|row| row.iter().map(|&c| complex(c)).collect())
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorJson {
    pub poly: PolyJson,
    pub exp: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeJson {
    #[default]
    Inner,
    Polynomial,
}

/// Input description of a rational inner function (`p` is the denominator) or of a
/// polynomial (`p` is the generator itself, `k = l = 0`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InnerInput {
    #[serde(default)]
    pub k: usize,
    #[serde(default)]
    pub l: usize,
    pub p: PolyJson,
    #[serde(default)]
    pub factors: Vec<FactorJson>,
    #[serde(default)]
    pub mode: ModeJson,
}

impl InnerInput {
    pub fn parse(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn build(&self) -> Result<RationalInner<f64>> {
        let factors = self
            .factors
            .iter()
            .map(|f| Factor {
                poly: f.poly.to_poly(),
                exp: f.exp,
            })
            .collect();
        match self.mode {
            ModeJson::Inner => make_rational_inner(self.p.to_poly(), self.k, self.l, factors),
            ModeJson::Polynomial => {
                if self.k != 0 || self.l != 0 {
                    return Err(crate::Error::InvalidArgument(
                        "k and l must be 0 in polynomial mode".into(),
                    ));
                }
                make_polynomial(self.p.to_poly(), factors)
            }
        }
    }

    pub fn from_inner<T: Real>(theta: &RationalInner<T>) -> Self {
        let factors = theta
            .factors()
            .iter()
            .map(|f| FactorJson {
                poly: PolyJson::from_poly(&f.poly),
                exp: f.exp,
            })
            .collect();
        match theta.mode() {
            Mode::Inner => Self {
                k: theta.k(),
                l: theta.l(),
                p: PolyJson::from_poly(theta.denominator()),
                factors,
                mode: ModeJson::Inner,
            },
            Mode::Polynomial => Self {
                k: 0,
                l: 0,
                p: PolyJson::from_poly(theta.numerator()),
                factors,
                mode: ModeJson::Polynomial,
            },
        }
    }
}

pub fn complex<T: Real>(z: C<T>) -> [f64; 2] {
    [z.re.as_f64(), z.im.as_f64()]
}

pub fn matrix<T: Real>(m: &CMat<T>) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| {
                json!((0..m.ncols())
                    .map(|j| complex(m[(i, j)]))
                    .collect::<Vec<_>>())
            })
            .collect(),
    )
}

pub fn reducibility_json<T: Real>(r: &ReducibilityReport<T>) -> Value {
    json!({
        "component_id": r.component_id,
        "lambda": complex(r.lambda),
        "blocks": r.blocks.iter().map(|&(n, m)| json!({"n": n, "m": m})).collect::<Vec<_>>(),
        "commutant_dim": r.commutant_dim,
        "algebra_dim": r.algebra_dim,
        "minimal_projections": r.minimal_projections.iter().map(matrix).collect::<Vec<_>>(),
        "verdict": r.verdict.as_str(),
        "sample_points": r.sample_points.iter().map(|&z| complex(z)).collect::<Vec<_>>(),
        "votes": r.votes,
    })
}

pub fn strict_json<T: Real>(r: &StrictReducibilityReport<T>) -> Value {
    let witness = r.witness.as_ref().map(|w| {
        json!({
            "max_cross_inner_product": w.max_inner.as_f64(),
            "components": w.components.iter().map(|c| json!({
                "label": c.label,
                "base": complex(c.base),
                "rank": c.rank,
                "projection": matrix(&c.projection),
                "samples": c.first.len(),
            })).collect::<Vec<_>>(),
        })
    });
    json!({
        "verdict": r.verdict.as_str(),
        "shortcut_rank_one": r.shortcut,
        "global_commutant_dim": r.global_commutant_dim,
        "per_component": r.per_component.iter().map(reducibility_json).collect::<Vec<_>>(),
        "cross_orthogonality": r.cross_orthogonality,
        "witness": witness,
    })
}

//! Serde form of polynomials: exact rationals as `"p/q"` strings.

use serde::{Deserialize, Serialize};

use super::{format_rational, parse_rational, AlgebraError, Block, GaussianRational, MultiIndex, Polynomial};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermJson {
    pub zi: Vec<u32>,
    pub zj_or_w: Vec<u32>,
    pub re: String,
    pub im: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolynomialJson {
    #[serde(rename = "N")]
    pub n: usize,
    pub block: String,
    pub terms: Vec<TermJson>,
}

impl<K: Block> Polynomial<K> {
    /// Canonical JSON form: terms in key order, zero terms absent.
    pub fn to_json(&self) -> PolynomialJson {
        PolynomialJson {
            n: self.n(),
            block: K::NAME.to_string(),
            terms: self
                .terms()
                .map(|((a, b), c)| TermJson {
                    zi: a.to_vec(),
                    zj_or_w: b.to_vec(),
                    re: format_rational(c.re()),
                    im: format_rational(c.im()),
                })
                .collect(),
        }
    }

    pub fn from_json(j: &PolynomialJson) -> Result<Self, AlgebraError> {
        if j.block != K::NAME {
            return Err(AlgebraError::BlockMismatch { expected: K::NAME.into(), found: j.block.clone() });
        }
        if j.n == 0 {
            return Err(AlgebraError::ArityMismatch { left: 0, right: 1 });
        }
        let mut p = Self::zero(j.n);
        for t in &j.terms {
            if t.zi.len() != p.first_arity() {
                return Err(AlgebraError::ExponentLength { expected: p.first_arity(), found: t.zi.len() });
            }
            if t.zj_or_w.len() != p.second_arity() {
                return Err(AlgebraError::ExponentLength { expected: p.second_arity(), found: t.zj_or_w.len() });
            }
            if t.zi.iter().chain(&t.zj_or_w).any(|&e| e > 255) {
                return Err(AlgebraError::MalformedRational(format!("exponent too large in {:?}", t.zi)));
            }
            let c = GaussianRational::new(parse_rational(&t.re)?, parse_rational(&t.im)?);
            p.add_term(MultiIndex::from_slice(&t.zi), MultiIndex::from_slice(&t.zj_or_w), c);
        }
        Ok(p)
    }
}

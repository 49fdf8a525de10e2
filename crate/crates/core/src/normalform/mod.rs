//! Degree-by-degree partial normal form and the degree-doubling step.

mod equation;
pub mod instances;
mod solve;
mod theta;
mod verify;

pub use equation::{equation_residual, substituted_equation, substitute_transformation};
pub use solve::{
    degree_defect, normalize, solve_f_neardiagonal, solve_f_offdiagonal, solve_g, solve_g_pure, NormalFormJson, NormalFormResult,
    Slot, SlotCertificate, SlotCertificateJson,
};
pub use theta::{invert_substitution, theta_step, transform_manifold, ThetaOutcome};
pub use verify::{verify_normal_form, CheckRecord, NormalFormReport};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::json::PolynomialJson;
use crate::algebra::{AlgebraError, Matrix, MultiIndex, TransformPolynomial};
use crate::fischer::FischerError;
use crate::manifold::ManifoldError;

#[derive(Debug, Error)]
pub enum NormalFormError {
    #[error("requested degree {requested} exceeds the manifold truncation d_max = {d_max}")]
    Truncation { requested: u32, d_max: u32 },
    #[error("perturbation order {found:?} is below the required {required}")]
    Order { required: u32, found: Option<u32> },
    #[error("degree doubling failed: expected order >= {expected}, found {found:?}")]
    Doubling { expected: u32, found: Option<u32> },
    #[error("certificate failed to verify at bidegree ({m},{n}); internal bug")]
    Certificate { m: u32, n: u32 },
    #[error(transparent)]
    Fischer(#[from] FischerError),
    #[error(transparent)]
    Manifold(#[from] ManifoldError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed transformation: {0}")]
    Malformed(String),
}

/// `(Z', W') = (F(Z, W), G(Z, W))` with `F` 2×N and `G` 2×2.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transformation {
    n: usize,
    f: Matrix<TransformPolynomial>,
    g: Matrix<TransformPolynomial>,
    wt_max: u32,
}

impl Transformation {
    pub fn identity(n: usize, wt_max: u32) -> Self {
        Self {
            n,
            f: Matrix::from_fn(2, n, |a, j| TransformPolynomial::z(n, a + 1, j + 1)),
            g: Matrix::from_fn(2, 2, |a, b| TransformPolynomial::w(n, a + 1, b + 1)),
            wt_max,
        }
    }

    pub fn new(f: Matrix<TransformPolynomial>, g: Matrix<TransformPolynomial>, wt_max: u32) -> Result<Self, NormalFormError> {
        if f.rows() != 2 || g.rows() != 2 || g.cols() != 2 || f.cols() == 0 {
            return Err(NormalFormError::Malformed("F must be 2xN and G 2x2".into()));
        }
        let n = f.cols();
        if f.iter().chain(g.iter()).any(|(_, p)| p.n() != n) {
            return Err(NormalFormError::Malformed("entries disagree on N".into()));
        }
        Ok(Self { n, f, g, wt_max })
    }

    /// Identity plus the given corrections.
    pub fn from_corrections(f: &Matrix<TransformPolynomial>, g: &Matrix<TransformPolynomial>, wt_max: u32) -> Self {
        let id = Self::identity(f.cols(), wt_max);
        Self {
            n: id.n,
            f: Matrix::from_fn(2, id.n, |a, j| id.f.get(a, j) + f.get(a, j)),
            g: Matrix::from_fn(2, 2, |a, b| id.g.get(a, b) + g.get(a, b)),
            wt_max,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn f(&self) -> &Matrix<TransformPolynomial> {
        &self.f
    }

    pub fn g(&self) -> &Matrix<TransformPolynomial> {
        &self.g
    }

    pub fn wt_max(&self) -> u32 {
        self.wt_max
    }

    /// `F − Z`.
    pub fn f_correction(&self) -> Matrix<TransformPolynomial> {
        let id = Self::identity(self.n, self.wt_max);
        Matrix::from_fn(2, self.n, |a, j| self.f.get(a, j) - id.f.get(a, j))
    }

    /// `G − W`.
    pub fn g_correction(&self) -> Matrix<TransformPolynomial> {
        let id = Self::identity(self.n, self.wt_max);
        Matrix::from_fn(2, 2, |a, b| self.g.get(a, b) - id.g.get(a, b))
    }

    pub fn is_identity(&self) -> bool {
        self.f_correction().iter().all(|(_, p)| p.is_zero()) && self.g_correction().iter().all(|(_, p)| p.is_zero())
    }

    /// Normalization of the map: `F − Z` has no terms of z-degree 0 or 1
    /// (`F_{0,l} = 0`, `F_{1,l} = 0` for `l ≥ 1`, no constant or linear
    /// part), and `G − W` has weighted order at least 3.
    pub fn satisfies_map_normalization(&self) -> bool {
        let f_ok = self.f_correction().iter().all(|(_, p)| p.terms().all(|((a, _), _)| a.degree() >= 2));
        let g_ok = self.g_correction().iter().all(|(_, p)| p.order().is_none_or(|o| o >= 3));
        f_ok && g_ok
    }

    /// Components with weighted degree above `wt` dropped.
    pub fn truncated(&self, wt: u32) -> Self {
        Self { n: self.n, f: self.f.map(|p| p.truncate(wt)), g: self.g.map(|p| p.truncate(wt)), wt_max: wt }
    }

    pub fn to_json(&self) -> TransformationJson {
        let rows = |m: &Matrix<TransformPolynomial>| {
            (0..m.rows()).map(|r| (0..m.cols()).map(|c| m.get(r, c).to_json()).collect()).collect()
        };
        TransformationJson { n: self.n, wt_max: self.wt_max, f: rows(&self.f), g: rows(&self.g) }
    }

    pub fn from_json(j: &TransformationJson) -> Result<Self, NormalFormError> {
        let parse = |rows: &Vec<Vec<PolynomialJson>>, cols: usize| -> Result<Matrix<TransformPolynomial>, NormalFormError> {
            if rows.len() != 2 || rows.iter().any(|r| r.len() != cols) {
                return Err(NormalFormError::Malformed(format!("expected 2x{cols} block")));
            }
            let mut out = Matrix::from_fn(2, cols, |_, _| TransformPolynomial::zero(j.n));
            for (r, row) in rows.iter().enumerate() {
                for (c, p) in row.iter().enumerate() {
                    *out.get_mut(r, c) = TransformPolynomial::from_json(p)?;
                }
            }
            Ok(out)
        };
        if j.n == 0 {
            return Err(NormalFormError::Malformed("N must be positive".into()));
        }
        Self::new(parse(&j.f, j.n)?, parse(&j.g, 2)?, j.wt_max)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransformationJson {
    #[serde(rename = "N")]
    pub n: usize,
    pub wt_max: u32,
    #[serde(rename = "F")]
    pub f: Vec<Vec<PolynomialJson>>,
    #[serde(rename = "G")]
    pub g: Vec<Vec<PolynomialJson>>,
}

/// `I = (i1, i2, i3, i4) ↦ (i1, i3, i2, i4)`, so that
/// `conj(H^I) = H^{swap(I)}`.
pub fn swap_form_index(i: &MultiIndex) -> MultiIndex {
    MultiIndex::from_slice(&[i.get(0), i.get(2), i.get(1), i.get(3)])
}

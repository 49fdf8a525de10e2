//! The quadric model `W = Z Z̄ᵗ`, its Hermitian forms, and perturbed
//! submanifolds `W = Z Z̄ᵗ + E(Z, Z̄)`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::json::PolynomialJson;
use crate::algebra::{
    conj_transpose, mat_mul_truncated, mat_sub, model_phi, AlgebraError, BiPolynomial, Matrix, MultiIndex,
    TransformPolynomial,
};

#[derive(Debug, Error)]
pub enum ManifoldError {
    #[error("perturbation must be O(3): entry ({a},{b}) has a term of degree {degree}")]
    NotO3 { a: usize, b: usize, degree: u32 },
    #[error("entry ({a},{b}) has a term of degree {degree} above d_max = {d_max}")]
    AboveTruncation { a: usize, b: usize, degree: u32, d_max: u32 },
    #[error("reality conflict between entry ({a},{b}) bidegree ({m},{n}) and its conjugate slot")]
    RealityConflict { a: usize, b: usize, m: u32, n: u32 },
    #[error("poly for entry ({a},{b}) is not bihomogeneous of the declared bidegree ({m},{n})")]
    BidegreeMismatch { a: usize, b: usize, m: u32, n: u32 },
    #[error("entry index ({a},{b}) out of range; entries are 1-based in a 2x2 matrix")]
    EntryIndex { a: usize, b: usize },
    #[error("polynomial N = {found} does not match manifold N = {expected}")]
    NMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("invalid manifold JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// `⟨l_a, l_b⟩ = Σ_j z_{aj} z̄_{bj}`, 1-based `a, b`.
pub fn hermitian_form(a: usize, b: usize, n: usize) -> BiPolynomial {
    assert!((1..=2).contains(&a) && (1..=2).contains(&b), "form indices are 1 or 2");
    let mut p = BiPolynomial::zero(n);
    for j in 1..=n {
        p.add_assign_ref(&(&BiPolynomial::z(n, a, j) * &BiPolynomial::zbar(n, b, j)));
    }
    p
}

/// `H^I = ⟨l1,l1⟩^{i1} ⟨l1,l2⟩^{i2} ⟨l2,l1⟩^{i3} ⟨l2,l2⟩^{i4}`.
pub fn form_power(i: &MultiIndex, n: usize) -> BiPolynomial {
    assert_eq!(i.len(), 4, "form powers are indexed by N^4");
    let mut p = BiPolynomial::one(n);
    for (k, (a, b)) in [(1, 1), (1, 2), (2, 1), (2, 2)].into_iter().enumerate() {
        let h = hermitian_form(a, b, n);
        for _ in 0..i.get(k) {
            p = &p * &h;
        }
    }
    p
}

/// The 2×2 model matrix `Z Z̄ᵗ`.
pub fn model_rhs(n: usize) -> Matrix<BiPolynomial> {
    model_phi(n)
}

/// A submanifold `W = Z Z̄ᵗ + E(Z, Z̄)` known up to total degree `d_max`.
///
/// `real` marks data satisfying `conj(E)ᵗ = E`; input manifolds are real,
/// while the transformed data produced downstream need not be.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManifoldSpec {
    n: usize,
    d_max: u32,
    e: Matrix<BiPolynomial>,
    real: bool,
}

impl ManifoldSpec {
    /// Validates `E` and, when `real`, completes it by reality.
    pub fn new(n: usize, d_max: u32, e: Matrix<BiPolynomial>, real: bool) -> Result<Self, ManifoldError> {
        assert!(e.rows() == 2 && e.cols() == 2, "E must be 2x2");
        for ((a, b), p) in e.iter() {
            if p.n() != n {
                return Err(ManifoldError::NMismatch { expected: n, found: p.n() });
            }
            if let Some(degree) = p.order() {
                if degree < 3 {
                    return Err(ManifoldError::NotO3 { a: a + 1, b: b + 1, degree });
                }
            }
            if let Some(degree) = p.max_degree() {
                if degree > d_max {
                    return Err(ManifoldError::AboveTruncation { a: a + 1, b: b + 1, degree, d_max });
                }
            }
        }
        let spec = Self { n, d_max, e, real };
        if real {
            spec.enforce_reality()
        } else {
            Ok(spec)
        }
    }

    pub fn model(n: usize, d_max: u32) -> Self {
        Self { n, d_max, e: Matrix::from_fn(2, 2, |_, _| BiPolynomial::zero(n)), real: true }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d_max(&self) -> u32 {
        self.d_max
    }

    pub fn e(&self) -> &Matrix<BiPolynomial> {
        &self.e
    }

    pub fn is_real_flagged(&self) -> bool {
        self.real
    }

    /// `Φ = Z Z̄ᵗ + E`.
    pub fn phi(&self) -> Matrix<BiPolynomial> {
        let m = model_phi(self.n);
        Matrix::from_fn(2, 2, |a, b| m.get(a, b) + self.e.get(a, b))
    }

    /// Smallest total degree in `E`; `None` when `E = 0`.
    pub fn order(&self) -> Option<u32> {
        self.e.iter().filter_map(|(_, p)| p.order()).min()
    }

    /// Same data at a lower truncation.
    pub fn truncated(&self, d_max: u32) -> Self {
        Self { n: self.n, d_max, e: self.e.map(|p| p.truncate(d_max)), real: self.real }
    }

    /// `conj(E)ᵗ = E` exactly.
    pub fn satisfies_reality(&self) -> bool {
        conj_transpose(&self.e) == self.e
    }

    /// Fills each bidegree-`(n,m)` slot of entry `(b,a)` with the conjugate
    /// of the bidegree-`(m,n)` part of entry `(a,b)`; conflicting data is an
    /// error. Idempotent.
    pub fn enforce_reality(&self) -> Result<Self, ManifoldError> {
        let mut out = self.e.clone();
        for ((a, b), p) in self.e.iter() {
            for (m, n) in p.bidegrees() {
                let mirror = p.bidegree_part(m, n).conjugate();
                let present = self.e.get(b, a).bidegree_part(n, m);
                if present.is_zero() {
                    out.get_mut(b, a).add_assign_ref(&mirror);
                } else if present != mirror {
                    return Err(ManifoldError::RealityConflict { a: a + 1, b: b + 1, m, n });
                }
            }
        }
        Ok(Self { n: self.n, d_max: self.d_max, e: out, real: true })
    }

    pub fn to_json(&self) -> ManifoldJson {
        let mut entries = Vec::new();
        for ((a, b), p) in self.e.iter() {
            for (m, n) in p.bidegrees() {
                entries.push(EntryJson { entry: [a + 1, b + 1], bidegree: [m, n], poly: p.bidegree_part(m, n).to_json() });
            }
        }
        ManifoldJson { n: self.n, d_max: self.d_max, real: Some(self.real), e: entries }
    }

    pub fn from_json(j: &ManifoldJson) -> Result<Self, ManifoldError> {
        let n = j.n;
        if n == 0 {
            return Err(ManifoldError::NMismatch { expected: 1, found: 0 });
        }
        let mut e = Matrix::from_fn(2, 2, |_, _| BiPolynomial::zero(n));
        for ent in &j.e {
            let [a, b] = ent.entry;
            if !(1..=2).contains(&a) || !(1..=2).contains(&b) {
                return Err(ManifoldError::EntryIndex { a, b });
            }
            let p = BiPolynomial::from_json(&ent.poly)?;
            if p.n() != n {
                return Err(ManifoldError::NMismatch { expected: n, found: p.n() });
            }
            let [m, nn] = ent.bidegree;
            if !p.is_bihomogeneous(m, nn) {
                return Err(ManifoldError::BidegreeMismatch { a, b, m, n: nn });
            }
            e.get_mut(a - 1, b - 1).add_assign_ref(&p);
        }
        Self::new(n, j.d_max, e, j.real.unwrap_or(true))
    }

    pub fn from_json_str(s: &str) -> Result<Self, ManifoldError> {
        Self::from_json(&serde_json::from_str(s)?)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("manifold JSON serializes")
    }
}

/// Reads and validates a manifold file.
pub fn ingest(path: impl AsRef<Path>) -> Result<ManifoldSpec, ManifoldError> {
    ManifoldSpec::from_json_str(&std::fs::read_to_string(path)?)
}

pub fn emit(spec: &ManifoldSpec, path: impl AsRef<Path>) -> Result<(), ManifoldError> {
    std::fs::write(path, spec.to_json_string() + "\n")?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryJson {
    pub entry: [usize; 2],
    pub bidegree: [u32; 2],
    pub poly: PolynomialJson,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifoldJson {
    #[serde(rename = "N")]
    pub n: usize,
    pub d_max: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub real: Option<bool>,
    #[serde(rename = "E")]
    pub e: Vec<EntryJson>,
}

/// Substitutes `W ↦ Φ` into each entry of a transformation block.
pub fn substitute_block(block: &Matrix<TransformPolynomial>, phi: &Matrix<BiPolynomial>, trunc: u32) -> Matrix<BiPolynomial> {
    block.map(|p| p.substitute_w(phi, trunc))
}

/// Checks `G(Z, ZZ̄ᵗ) = F(Z, ZZ̄ᵗ)·conj(F(Z, ZZ̄ᵗ))ᵗ` up to total degree
/// `trunc`; `f` is 2×N, `g` is 2×2.
pub fn verify_model_automorphism(f: &Matrix<TransformPolynomial>, g: &Matrix<TransformPolynomial>, trunc: u32) -> bool {
    model_automorphism_defect(f, g, trunc).iter().all(|(_, p)| p.is_zero())
}

pub fn model_automorphism_defect(
    f: &Matrix<TransformPolynomial>,
    g: &Matrix<TransformPolynomial>,
    trunc: u32,
) -> Matrix<BiPolynomial> {
    let n = f.get(0, 0).n();
    let phi = model_phi(n);
    let fs = substitute_block(f, &phi, trunc);
    let gs = substitute_block(g, &phi, trunc);
    mat_sub(&gs, &mat_mul_truncated(&fs, &conj_transpose(&fs), trunc))
}

/// Counts bidegree parts per entry; handy for summaries.
pub fn bidegree_census(e: &Matrix<BiPolynomial>) -> BTreeMap<(usize, usize), Vec<(u32, u32)>> {
    e.iter().map(|((a, b), p)| ((a + 1, b + 1), p.bidegrees())).collect()
}

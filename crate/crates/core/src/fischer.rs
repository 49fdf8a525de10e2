//! Fischer inner product and the two generalized Fischer decompositions
//! with respect to products of the Hermitian forms `⟨l_a, l_b⟩`.

use std::collections::BTreeMap;
use std::fmt;

use num::rational::BigRational;
use num::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::json::PolynomialJson;
use crate::algebra::{compositions, BiPolynomial, GaussianRational, MultiIndex};
use crate::linalg::solve_hermitian_min_norm;
use crate::manifold::form_power;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FischerError {
    #[error("input is not bihomogeneous")]
    NotBihomogeneous,
    #[error("bidegree ({m},{n}) is outside the range of this decomposition")]
    BidegreeOutOfRange { m: u32, n: u32 },
    #[error("divisor family has |I| = {found}, the bidegree requires {expected}")]
    WrongFamilyDegree { expected: u32, found: u32 },
    #[error("N mismatch: {0} vs {1}")]
    NMismatch(usize, usize),
    #[error("internal: {0}")]
    Internal(String),
}

/// `⟨p, q⟩_F = Σ c_p · conj(c_q) · I! J!` over shared exponents.
pub fn fischer_inner(p: &BiPolynomial, q: &BiPolynomial) -> Result<GaussianRational, FischerError> {
    if p.n() != q.n() {
        return Err(FischerError::NMismatch(p.n(), q.n()));
    }
    Ok(inner_unchecked(p, q))
}

fn inner_unchecked(p: &BiPolynomial, q: &BiPolynomial) -> GaussianRational {
    let (small, large, swap) = if p.len() <= q.len() { (p, q, false) } else { (q, p, true) };
    let mut acc = GaussianRational::zero();
    for ((a, b), c) in small.terms() {
        let d = large.coeff(a, b);
        if d.is_zero() {
            continue;
        }
        let w = a.factorial() * b.factorial();
        let prod = if swap { &d * &c.conj() } else { c * &d.conj() };
        acc += &prod.scale_int(&w);
    }
    acc
}

/// `‖p‖²_F = Σ I! J! |c_{I,J}|²`.
pub fn fischer_norm_sq(p: &BiPolynomial) -> BigRational {
    p.terms().map(|((a, b), c)| c.norm_sqr() * BigRational::from_integer(a.factorial() * b.factorial())).sum()
}

/// `p*(D) t = Σ conj(p_{I,J}) ∂^I_Z ∂^J_Z̄ t`.
pub fn adjoint_apply(p: &BiPolynomial, target: &BiPolynomial) -> BiPolynomial {
    let mut out = BiPolynomial::zero(target.n());
    for ((a, b), c) in p.terms() {
        let d = target.diff_multi(a, b);
        if !d.is_zero() {
            out.add_assign_ref(&d.scale(&c.conj()));
        }
    }
    out
}

/// `‖f‖² = ‖g‖² + ‖h‖²`, exactly.
pub fn verify_pythagoras(f: &BiPolynomial, g: &BiPolynomial, h: &BiPolynomial) -> bool {
    fischer_norm_sq(f) == fischer_norm_sq(g) + fischer_norm_sq(h)
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Type1,
    Type2,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Type1 => "type1",
            Mode::Type2 => "type2",
        })
    }
}

/// Names one divisor: `H^I` (type 1) or `(z_{1j} + z_{2j}) H^I` (type 2).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DivisorLabel {
    /// 1-based column for type 2, `None` for type 1.
    pub j: Option<usize>,
    pub form: MultiIndex,
}

impl fmt::Display for DivisorLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.j {
            Some(j) => write!(f, "(z1{j}+z2{j})H^{:?}", self.form),
            None => write!(f, "H^{:?}", self.form),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DivisorFamily {
    pub mode: Mode,
    pub n: usize,
    /// `|I|`.
    pub n_forms: u32,
}

impl DivisorFamily {
    pub fn type1(n: usize, n_forms: u32) -> Self {
        Self { mode: Mode::Type1, n, n_forms }
    }

    pub fn type2(n: usize, n_forms: u32) -> Self {
        Self { mode: Mode::Type2, n, n_forms }
    }

    /// The divisors in label order.
    pub fn divisors(&self) -> Vec<(DivisorLabel, BiPolynomial)> {
        let forms = compositions(4, self.n_forms);
        match self.mode {
            Mode::Type1 => forms.into_iter().map(|i| {
                let h = form_power(&i, self.n);
                (DivisorLabel { j: None, form: i }, h)
            }).collect(),
            Mode::Type2 => {
                let mut out = Vec::new();
                for j in 1..=self.n {
                    let lin = &BiPolynomial::z(self.n, 1, j) + &BiPolynomial::z(self.n, 2, j);
                    for i in &forms {
                        out.push((DivisorLabel { j: Some(j), form: i.clone() }, &lin * &form_power(i, self.n)));
                    }
                }
                out
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KernelCheck {
    pub label: DivisorLabel,
    /// `divisor*(D) R`; must be zero.
    pub result: BiPolynomial,
}

/// `input = Σ divisor·quotient + remainder` with the remainder in the
/// common kernel of the adjoint divisors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FischerCertificate {
    pub mode: Mode,
    pub input: BiPolynomial,
    pub quotients: BTreeMap<DivisorLabel, BiPolynomial>,
    pub divisors: BTreeMap<DivisorLabel, BiPolynomial>,
    pub remainder: BiPolynomial,
    pub kernel_evidence: Vec<KernelCheck>,
}

impl FischerCertificate {
    /// `Σ divisor·quotient`.
    pub fn span_part(&self) -> BiPolynomial {
        let mut s = BiPolynomial::zero(self.input.n());
        for (label, q) in &self.quotients {
            s.add_assign_ref(&(&self.divisors[label] * q));
        }
        s
    }

    pub fn reconstruction_holds(&self) -> bool {
        &self.span_part() + &self.remainder == self.input
    }

    pub fn kernel_holds(&self) -> bool {
        self.kernel_evidence.iter().all(|k| k.result.is_zero())
    }

    /// Reconstruction, kernel evidence and Pythagoras, all exact.
    pub fn verify(&self) -> bool {
        self.reconstruction_holds() && self.kernel_holds() && verify_pythagoras(&self.input, &self.span_part(), &self.remainder)
    }

    pub fn quotient(&self, label: &DivisorLabel) -> BiPolynomial {
        self.quotients.get(label).cloned().unwrap_or_else(|| BiPolynomial::zero(self.input.n()))
    }

    pub fn to_json(&self) -> CertificateJson {
        CertificateJson {
            mode: self.mode,
            input: self.input.to_json(),
            quotients: self
                .quotients
                .iter()
                .map(|(l, q)| QuotientJson { label: LabelJson::from(l), poly: q.to_json() })
                .collect(),
            remainder: self.remainder.to_json(),
            kernel_checks: self
                .kernel_evidence
                .iter()
                .map(|k| KernelCheckJson { label: LabelJson::from(&k.label), is_zero: k.result.is_zero() })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j: Option<usize>,
    #[serde(rename = "I")]
    pub form: Vec<u32>,
}

impl From<&DivisorLabel> for LabelJson {
    fn from(l: &DivisorLabel) -> Self {
        Self { j: l.j, form: l.form.to_vec() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuotientJson {
    pub label: LabelJson,
    pub poly: PolynomialJson,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelCheckJson {
    pub label: LabelJson,
    pub is_zero: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertificateJson {
    pub mode: Mode,
    pub input: PolynomialJson,
    pub quotients: Vec<QuotientJson>,
    pub remainder: PolynomialJson,
    pub kernel_checks: Vec<KernelCheckJson>,
}

/// Monomial grading preserved by multiplication with every divisor of the
/// family; distinct keys are Fischer-orthogonal, so the projection splits
/// into independent blocks.
fn grading_key(mode: Mode, n: usize, a: &MultiIndex, b: &MultiIndex) -> Vec<i64> {
    let row = |m: &MultiIndex, r: usize| (0..n).map(|j| m.get(r * n + j) as i64).sum::<i64>();
    let col = |m: &MultiIndex, j: usize| (m.get(j) + m.get(n + j)) as i64;
    let mut key = Vec::with_capacity(n + 4);
    if mode == Mode::Type1 {
        key.extend([row(a, 0), row(a, 1)]);
    }
    key.extend([row(b, 0), row(b, 1)]);
    key.extend((0..n).map(|j| col(a, j) - col(b, j)));
    key
}

struct BasisElement {
    label: DivisorLabel,
    multiplier: BiPolynomial,
    product: BiPolynomial,
}

/// Orthogonal projection of `p` onto `span{multiplier·divisor}` with
/// multipliers the monomials of the given bidegree.
fn project(
    mode: Mode,
    p: &BiPolynomial,
    divisors: Vec<(DivisorLabel, BiPolynomial)>,
    mult_bidegree: (u32, u32),
) -> Result<FischerCertificate, FischerError> {
    let n = p.n();
    let monos: Vec<(MultiIndex, MultiIndex)> = compositions(2 * n, mult_bidegree.0)
        .into_iter()
        .flat_map(|a| compositions(2 * n, mult_bidegree.1).into_iter().map(move |b| (a.clone(), b)))
        .collect();
    let mut blocks: BTreeMap<Vec<i64>, Vec<BasisElement>> = BTreeMap::new();
    for (label, d) in &divisors {
        for (a, b) in &monos {
            let multiplier = BiPolynomial::monomial(n, a.clone(), b.clone(), GaussianRational::one());
            let product = &multiplier * d;
            let Some(((pa, pb), _)) = product.terms().next() else { continue };
            let key = grading_key(mode, n, pa, pb);
            blocks.entry(key).or_default().push(BasisElement { label: label.clone(), multiplier, product });
        }
    }
    let mut p_blocks: BTreeMap<Vec<i64>, BiPolynomial> = BTreeMap::new();
    for ((a, b), c) in p.terms() {
        p_blocks
            .entry(grading_key(mode, n, a, b))
            .or_insert_with(|| BiPolynomial::zero(n))
            .add_term(a.clone(), b.clone(), c.clone());
    }
    let mut quotients: BTreeMap<DivisorLabel, BiPolynomial> = BTreeMap::new();
    let mut span = BiPolynomial::zero(n);
    for (key, target) in &p_blocks {
        let Some(basis) = blocks.get(key) else { continue };
        let k = basis.len();
        let mut g = vec![vec![GaussianRational::zero(); k]; k];
        for r in 0..k {
            for c in r..k {
                let v = inner_unchecked(&basis[c].product, &basis[r].product);
                if c != r {
                    g[c][r] = v.conj();
                }
                g[r][c] = v;
            }
        }
        let rhs: Vec<GaussianRational> = basis.iter().map(|e| inner_unchecked(target, &e.product)).collect();
        let x = solve_hermitian_min_norm(&g, &rhs)
            .ok_or_else(|| FischerError::Internal("inconsistent normal equations".into()))?;
        for (e, xi) in basis.iter().zip(&x) {
            if xi.is_zero() {
                continue;
            }
            quotients.entry(e.label.clone()).or_insert_with(|| BiPolynomial::zero(n)).add_assign_ref(&e.multiplier.scale(xi));
            span.add_assign_ref(&e.product.scale(xi));
        }
    }
    quotients.retain(|_, q| !q.is_zero());
    let remainder = p - &span;
    let kernel_evidence =
        divisors.iter().map(|(label, d)| KernelCheck { label: label.clone(), result: adjoint_apply(d, &remainder) }).collect();
    Ok(FischerCertificate {
        mode,
        input: p.clone(),
        quotients,
        divisors: divisors.into_iter().collect(),
        remainder,
        kernel_evidence,
    })
}

fn bidegree_of(p: &BiPolynomial, declared: Option<(u32, u32)>) -> Result<Option<(u32, u32)>, FischerError> {
    match (p.bidegree(), declared) {
        (Some(b), Some(d)) if b != d => Err(FischerError::NotBihomogeneous),
        (Some(b), _) => Ok(Some(b)),
        (None, d) if p.is_zero() => Ok(d),
        (None, _) => Err(FischerError::NotBihomogeneous),
    }
}

/// `p = Σ_{|I|=n} Q_I(Z) H^I + R` for `p` of bidegree `(m, n)`, `m ≥ n`.
///
/// `bidegree` is only consulted when `p = 0`.
pub fn decompose_type1(
    p: &BiPolynomial,
    family: &DivisorFamily,
    bidegree: Option<(u32, u32)>,
) -> Result<FischerCertificate, FischerError> {
    if family.mode != Mode::Type1 {
        return Err(FischerError::Internal("type1 decomposition needs a type1 family".into()));
    }
    if family.n != p.n() {
        return Err(FischerError::NMismatch(family.n, p.n()));
    }
    let (m, n) = bidegree_of(p, bidegree)?.unwrap_or((family.n_forms, family.n_forms));
    if m < n {
        return Err(FischerError::BidegreeOutOfRange { m, n });
    }
    if family.n_forms != n {
        return Err(FischerError::WrongFamilyDegree { expected: n, found: family.n_forms });
    }
    project(Mode::Type1, p, family.divisors(), (m - n, 0))
}

/// `p = Σ_j (z_{1j}+z_{2j}) Σ_{|I|=m-1} Q^j_I(Z̄) H^I + R'` for `p` of
/// bidegree `(m, n)`, `m < n`. For `m = 0` the family is empty and `p` is
/// returned as the remainder.
pub fn decompose_type2(
    p: &BiPolynomial,
    family: &DivisorFamily,
    bidegree: Option<(u32, u32)>,
) -> Result<FischerCertificate, FischerError> {
    if family.mode != Mode::Type2 {
        return Err(FischerError::Internal("type2 decomposition needs a type2 family".into()));
    }
    if family.n != p.n() {
        return Err(FischerError::NMismatch(family.n, p.n()));
    }
    let (m, n) = bidegree_of(p, bidegree)?.unwrap_or((family.n_forms + 1, family.n_forms + 2));
    if m >= n {
        return Err(FischerError::BidegreeOutOfRange { m, n });
    }
    if m == 0 {
        return Ok(FischerCertificate {
            mode: Mode::Type2,
            input: p.clone(),
            quotients: BTreeMap::new(),
            divisors: BTreeMap::new(),
            remainder: p.clone(),
            kernel_evidence: Vec::new(),
        });
    }
    if family.n_forms != m - 1 {
        return Err(FischerError::WrongFamilyDegree { expected: m - 1, found: family.n_forms });
    }
    project(Mode::Type2, p, family.divisors(), (0, n - m + 1))
}

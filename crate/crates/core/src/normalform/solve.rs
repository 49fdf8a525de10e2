use serde::{Deserialize, Serialize};

use crate::algebra::{conj_transpose, mat_mul_truncated, model_phi, z_matrix, BiPolynomial, Matrix, MultiIndex, TransformPolynomial};
use crate::fischer::{decompose_type1, decompose_type2, CertificateJson, DivisorFamily, FischerCertificate};
use crate::manifold::{ManifoldJson, ManifoldSpec};

use super::equation::substituted_equation;
use super::{swap_form_index, NormalFormError, Transformation, TransformationJson};

/// Where a certificate was used: a column sum `φ^{1b} + φ^{2b}` (F-path)
/// or a single entry `φ^{ab}` (G-path). Indices are 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Slot {
    Column(usize),
    Entry(usize, usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SlotCertificate {
    pub bidegree: (u32, u32),
    pub slot: Slot,
    pub certificate: FischerCertificate,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormalFormResult {
    pub source: ManifoldSpec,
    pub t_max: u32,
    pub transform: Transformation,
    /// `φ'`, stored as a (not necessarily Hermitian) manifold.
    pub normalized: ManifoldSpec,
    pub certificates: Vec<SlotCertificate>,
}

/// Converts a polynomial in `Z` alone into `Σ c Z^α W^w`.
fn holomorphic_times_w(q: &BiPolynomial, w: &MultiIndex) -> TransformPolynomial {
    let mut out = TransformPolynomial::zero(q.n());
    for ((a, b), c) in q.terms() {
        debug_assert!(b.is_zero(), "expected a holomorphic quotient");
        out.add_term(a.clone(), w.clone(), c.clone());
    }
    out
}

fn check(cert: &FischerCertificate, m: u32, n: u32) -> Result<(), NormalFormError> {
    if cert.reconstruction_holds() && cert.kernel_holds() {
        Ok(())
    } else {
        Err(NormalFormError::Certificate { m, n })
    }
}

/// Degree-`t` part of `G(Z,Φ) − F F̄ᵗ − φ'(F, F̄)` for the current
/// (degree `< t`) state: the data the degree-`t` unknowns must absorb.
pub fn degree_defect(
    m: &ManifoldSpec,
    h: &Transformation,
    phi_prime: &Matrix<BiPolynomial>,
    t: u32,
) -> Result<Matrix<BiPolynomial>, NormalFormError> {
    let s = substituted_equation(m, h, phi_prime, t)?;
    Ok(s.map(|p| (-p).homogeneous_part(t)))
}

/// F-path, `1 ≤ m < n`: the column sums `K^{1b} + K^{2b}` of bidegree
/// `(m,n)` are split by the type-2 family with `|I| = m − 1`; the
/// quotients give `F^{bj}_{n−m+1, m−1}(Z, W) = Σ_I conj(Q^j_I)(Z) W^{swap(I)}`.
/// Returns the 2×N F-block and the certificates per column.
fn solve_f_block(k: &Matrix<BiPolynomial>, m: u32, n: u32) -> Result<(Matrix<TransformPolynomial>, Vec<SlotCertificate>), NormalFormError> {
    let nn = k.get(0, 0).n();
    let fam = DivisorFamily::type2(nn, m - 1);
    let mut f = Matrix::from_fn(2, nn, |_, _| TransformPolynomial::zero(nn));
    let mut certs = Vec::new();
    for b in 0..2 {
        let p = &k.get(0, b).bidegree_part(m, n) + &k.get(1, b).bidegree_part(m, n);
        let cert = decompose_type2(&p, &fam, Some((m, n)))?;
        check(&cert, m, n)?;
        for (label, q) in &cert.quotients {
            let j = label.j.expect("type2 label carries a column") - 1;
            let w = swap_form_index(&label.form);
            f.get_mut(b, j).add_assign_ref(&holomorphic_times_w(&q.conjugate(), &w));
        }
        certs.push(SlotCertificate { bidegree: (m, n), slot: Slot::Column(b + 1), certificate: cert });
    }
    Ok((f, certs))
}

/// F-path for `m < n − 1`.
pub fn solve_f_offdiagonal(
    k: &Matrix<BiPolynomial>,
    m: u32,
    n: u32,
) -> Result<(Matrix<TransformPolynomial>, Vec<SlotCertificate>), NormalFormError> {
    assert!(m >= 1 && m + 1 < n, "off-diagonal F-path needs 1 <= m < n-1");
    solve_f_block(k, m, n)
}

/// F-path for bidegree `(m, m+1)`. The unknown `F_{0,m}` that would also
/// enter here is zero by the map normalization, so the system is the same
/// as off the diagonal.
pub fn solve_f_neardiagonal(
    k: &Matrix<BiPolynomial>,
    m: u32,
) -> Result<(Matrix<TransformPolynomial>, Vec<SlotCertificate>), NormalFormError> {
    assert!(m >= 1, "near-diagonal F-path needs m >= 1");
    solve_f_block(k, m, m + 1)
}

/// G-path, `m ≥ n ≥ 1`: each entry of `p` is split by the type-1 family with
/// `|I| = n`; `G^{ab}_{m−n,n} = −Σ_I Q_I(Z) W^I` and the remainders form
/// `φ'_{m,n}`.
pub fn solve_g(
    p: &Matrix<BiPolynomial>,
    m: u32,
    n: u32,
) -> Result<(Matrix<TransformPolynomial>, Matrix<BiPolynomial>, Vec<SlotCertificate>), NormalFormError> {
    assert!(m >= n && n >= 1, "G-path needs m >= n >= 1");
    let nn = p.get(0, 0).n();
    let fam = DivisorFamily::type1(nn, n);
    let mut g = Matrix::from_fn(2, 2, |_, _| TransformPolynomial::zero(nn));
    let mut phi = Matrix::from_fn(2, 2, |_, _| BiPolynomial::zero(nn));
    let mut certs = Vec::new();
    for a in 0..2 {
        for b in 0..2 {
            let cert = decompose_type1(&p.get(a, b).bidegree_part(m, n), &fam, Some((m, n)))?;
            check(&cert, m, n)?;
            for (label, q) in &cert.quotients {
                g.get_mut(a, b).sub_assign_ref(&holomorphic_times_w(q, &label.form));
            }
            *phi.get_mut(a, b) = cert.remainder.clone();
            certs.push(SlotCertificate { bidegree: (m, n), slot: Slot::Entry(a + 1, b + 1), certificate: cert });
        }
    }
    Ok((g, phi, certs))
}

/// Pure terms of degree `t`: `φ'_{0,t} = K_{0,t}` is forced, the reality
/// normalization sets `φ'_{t,0} = conj(φ'_{0,t})ᵗ`, and `G_{t,0}` absorbs
/// the difference `φ'_{t,0} − K_{t,0}`. Returns `(G_{t,0}, φ'_{t,0} + φ'_{0,t})`.
pub fn solve_g_pure(k: &Matrix<BiPolynomial>, t: u32) -> (Matrix<TransformPolynomial>, Matrix<BiPolynomial>) {
    let nn = k.get(0, 0).n();
    let anti = k.map(|p| p.bidegree_part(0, t));
    let holo = conj_transpose(&anti);
    let zero_w = MultiIndex::zeros(4);
    let g = Matrix::from_fn(2, 2, |a, b| holomorphic_times_w(&(holo.get(a, b) - &k.get(a, b).bidegree_part(t, 0)), &zero_w));
    let phi = Matrix::from_fn(2, 2, |a, b| holo.get(a, b) + anti.get(a, b));
    debug_assert_eq!(phi.get(0, 0).n(), nn);
    (g, phi)
}

/// Degree-`t` part of `f(Z, ZZ̄ᵗ) Z̄ᵗ + Z conj(f(Z, ZZ̄ᵗ))ᵗ`, the linear
/// contribution of a weighted-degree `t − 1` F-block.
fn linear_f_contribution(f: &Matrix<TransformPolynomial>, t: u32) -> Matrix<BiPolynomial> {
    let n = f.cols();
    let model = model_phi(n);
    let fs = f.map(|p| p.substitute_w(&model, t));
    let z = z_matrix(n);
    let a = mat_mul_truncated(&fs, &conj_transpose(&z), t);
    let b = mat_mul_truncated(&z, &conj_transpose(&fs), t);
    Matrix::from_fn(2, 2, |i, j| (a.get(i, j) + b.get(i, j)).homogeneous_part(t))
}

fn add_into<T>(acc: &mut Matrix<crate::algebra::Polynomial<T>>, x: &Matrix<crate::algebra::Polynomial<T>>)
where
    T: crate::algebra::Block,
{
    for r in 0..acc.rows() {
        for c in 0..acc.cols() {
            acc.get_mut(r, c).add_assign_ref(x.get(r, c));
        }
    }
}

/// Builds the normalizing transformation degree by degree for
/// `T = 3..=t_max` and returns it with `φ'` and all certificates.
pub fn normalize(m: &ManifoldSpec, t_max: u32) -> Result<NormalFormResult, NormalFormError> {
    if t_max > m.d_max() {
        return Err(NormalFormError::Truncation { requested: t_max, d_max: m.d_max() });
    }
    if let Some(o) = m.order() {
        if o < 3 {
            return Err(NormalFormError::Order { required: 3, found: Some(o) });
        }
    }
    let n = m.n();
    let mut f_corr = Matrix::from_fn(2, n, |_, _| TransformPolynomial::zero(n));
    let mut g_corr = Matrix::from_fn(2, 2, |_, _| TransformPolynomial::zero(n));
    let mut phi_prime = Matrix::from_fn(2, 2, |_, _| BiPolynomial::zero(n));
    let mut certificates = Vec::new();

    for t in 3..=t_max {
        let h = Transformation::from_corrections(&f_corr, &g_corr, t_max);
        let k = degree_defect(m, &h, &phi_prime, t)?;

        // F-path first: its blocks also feed the mirrored G-path bidegrees.
        let mut f_new = Matrix::from_fn(2, n, |_, _| TransformPolynomial::zero(n));
        for mm in 1..t {
            let nn = t - mm;
            if mm >= nn {
                break;
            }
            let (f, certs) = if nn == mm + 1 { solve_f_neardiagonal(&k, mm)? } else { solve_f_offdiagonal(&k, mm, nn)? };
            add_into(&mut f_new, &f);
            certificates.extend(certs);
        }
        let lin = linear_f_contribution(&f_new, t);
        let base = Matrix::from_fn(2, 2, |a, b| k.get(a, b) - lin.get(a, b));

        let mut g_new = Matrix::from_fn(2, 2, |_, _| TransformPolynomial::zero(n));
        let mut phi_t = Matrix::from_fn(2, 2, |_, _| BiPolynomial::zero(n));
        for mm in 1..t {
            let nn = t - mm;
            if mm < nn {
                add_into(&mut phi_t, &base.map(|p| p.bidegree_part(mm, nn)));
                continue;
            }
            let (g, phi, certs) = solve_g(&base, mm, nn)?;
            add_into(&mut g_new, &g);
            add_into(&mut phi_t, &phi);
            certificates.extend(certs);
        }
        let (g_pure, phi_pure) = solve_g_pure(&base, t);
        add_into(&mut g_new, &g_pure);
        add_into(&mut phi_t, &phi_pure);

        add_into(&mut f_corr, &f_new);
        add_into(&mut g_corr, &g_new);
        add_into(&mut phi_prime, &phi_t);
    }

    let transform = Transformation::from_corrections(&f_corr, &g_corr, t_max);
    let normalized = ManifoldSpec::new(n, t_max, phi_prime, false)?;
    Ok(NormalFormResult { source: m.clone(), t_max, transform, normalized, certificates })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotCertificateJson {
    pub bidegree: [u32; 2],
    pub slot: Slot,
    pub certificate: CertificateJson,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalFormJson {
    pub source: ManifoldJson,
    pub t_max: u32,
    pub transform: TransformationJson,
    pub normal_form: ManifoldJson,
}

impl NormalFormResult {
    pub fn to_json(&self) -> NormalFormJson {
        NormalFormJson {
            source: self.source.to_json(),
            t_max: self.t_max,
            transform: self.transform.to_json(),
            normal_form: self.normalized.to_json(),
        }
    }

    pub fn certificates_json(&self) -> Vec<SlotCertificateJson> {
        self.certificates
            .iter()
            .map(|c| SlotCertificateJson { bidegree: [c.bidegree.0, c.bidegree.1], slot: c.slot, certificate: c.certificate.to_json() })
            .collect()
    }

    /// Rebuilds a result from its JSON form; certificates are not stored
    /// there and come back empty.
    pub fn from_json(j: &NormalFormJson) -> Result<Self, NormalFormError> {
        Ok(Self {
            source: ManifoldSpec::from_json(&j.source)?,
            t_max: j.t_max,
            transform: Transformation::from_json(&j.transform)?,
            normalized: ManifoldSpec::from_json(&j.normal_form)?,
            certificates: Vec::new(),
        })
    }
}

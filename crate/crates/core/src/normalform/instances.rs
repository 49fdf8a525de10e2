//! Random test instances.
//!
//! Degree doubling only holds for submanifolds formally equivalent to the
//! model, so besides generic perturbations this module builds preimages
//! `M = H⁻¹(model)` of the model under random normalized maps `H`. Each
//! block of `H` is replaced by the minimum-norm representative of its
//! image, the same representative the normalizer picks, so that
//! normalizing `M` recovers `H` exactly.

use num::rational::BigRational;
use num::BigInt;
use rand::Rng;

use crate::algebra::{compositions, conj_transpose, model_phi, BiPolynomial, GaussianRational, Matrix, TransformPolynomial};
use crate::fischer::{decompose_type1, decompose_type2, DivisorFamily};
use crate::manifold::ManifoldSpec;

use super::equation::substituted_equation;
use super::{swap_form_index, NormalFormError, Transformation};

/// `(p + qi)/s` with small random integers; never zero.
pub fn random_coefficient<R: Rng>(rng: &mut R) -> GaussianRational {
    loop {
        let re = rng.gen_range(-3i64..=3);
        let im = rng.gen_range(-3i64..=3);
        if re != 0 || im != 0 {
            let den = BigInt::from(rng.gen_range(1i64..=4));
            return GaussianRational::new(BigRational::new(re.into(), den.clone()), BigRational::new(im.into(), den));
        }
    }
}

/// Random bihomogeneous polynomial; each monomial is present with
/// probability `density`, and at least one term is always present.
pub fn random_bihomogeneous<R: Rng>(n: usize, m: u32, nn: u32, density: f64, rng: &mut R) -> BiPolynomial {
    let za = compositions(2 * n, m);
    let zb = compositions(2 * n, nn);
    let mut p = BiPolynomial::zero(n);
    for a in &za {
        for b in &zb {
            if rng.gen_bool(density) {
                p.add_term(a.clone(), b.clone(), random_coefficient(rng));
            }
        }
    }
    if p.is_zero() {
        let a = za[rng.gen_range(0..za.len())].clone();
        let b = zb[rng.gen_range(0..zb.len())].clone();
        p.add_term(a, b, random_coefficient(rng));
    }
    p
}

fn random_zw<R: Rng>(n: usize, k: u32, l: u32, density: f64, rng: &mut R) -> TransformPolynomial {
    let mut p = TransformPolynomial::zero(n);
    for a in compositions(2 * n, k) {
        for w in compositions(4, l) {
            if rng.gen_bool(density) {
                p.add_term(a.clone(), w, random_coefficient(rng));
            }
        }
    }
    p
}

/// A real (Hermitian) perturbation `E = X + conj(X)ᵗ` with `X` random on
/// every bidegree of total degree in `lo..=hi`, scaled by `scale`.
pub fn random_real_manifold<R: Rng>(
    n: usize,
    lo: u32,
    hi: u32,
    d_max: u32,
    density: f64,
    scale: &GaussianRational,
    rng: &mut R,
) -> ManifoldSpec {
    assert!(lo >= 3 && hi <= d_max);
    let mut x = Matrix::from_fn(2, 2, |_, _| BiPolynomial::zero(n));
    for t in lo..=hi {
        for m in 0..=t {
            for a in 0..2 {
                for b in 0..2 {
                    if rng.gen_bool(0.5) {
                        x.get_mut(a, b).add_assign_ref(&random_bihomogeneous(n, m, t - m, density, rng).scale(scale));
                    }
                }
            }
        }
    }
    let ct = conj_transpose(&x);
    let e = Matrix::from_fn(2, 2, |a, b| x.get(a, b) + ct.get(a, b));
    ManifoldSpec::new(n, d_max, e, true).expect("hermitian by construction")
}

/// Minimum-norm representative of a G-block with z-degree `k` and w-degree
/// `l ≥ 1`.
fn canonical_g(g: &TransformPolynomial, k: u32, l: u32) -> TransformPolynomial {
    let n = g.n();
    let image = g.substitute_w(&model_phi(n), u32::MAX);
    let cert = decompose_type1(&image, &DivisorFamily::type1(n, l), Some((k + l, l))).expect("image lies in the span");
    let mut out = TransformPolynomial::zero(n);
    for (label, q) in &cert.quotients {
        for ((a, _), c) in q.terms() {
            out.add_term(a.clone(), label.form.clone(), c.clone());
        }
    }
    out
}

/// Minimum-norm representative of row `F^{b·}` with z-degree `k ≥ 2` and
/// w-degree `l`, judged through `Σ_j (z_{1j}+z_{2j}) conj(F^{bj}(Z, ZZ̄ᵗ))`.
fn canonical_f_row(row: &[TransformPolynomial], k: u32, l: u32) -> Vec<TransformPolynomial> {
    let n = row.len();
    let model = model_phi(n);
    let mut image = BiPolynomial::zero(n);
    for (j, f) in row.iter().enumerate() {
        let lin = &BiPolynomial::z(n, 1, j + 1) + &BiPolynomial::z(n, 2, j + 1);
        image.add_assign_ref(&(&lin * &f.substitute_w(&model, u32::MAX).conjugate()));
    }
    let cert = decompose_type2(&image, &DivisorFamily::type2(n, l), Some((l + 1, k + l))).expect("image lies in the span");
    let mut out = vec![TransformPolynomial::zero(n); n];
    for (label, q) in &cert.quotients {
        let j = label.j.expect("type2 label") - 1;
        let w = swap_form_index(&label.form);
        for ((a, _), c) in q.conjugate().terms() {
            out[j].add_term(a.clone(), w.clone(), c.clone());
        }
    }
    out
}

/// Random normalized map `H = id + corrections` with F-blocks of weighted
/// degree in `f_lo..=hi` and G-blocks in `f_lo+1..=hi`, every block in its
/// minimum-norm form.
pub fn random_normalized_map<R: Rng>(
    n: usize,
    f_lo: u32,
    hi: u32,
    density: f64,
    scale: &GaussianRational,
    rng: &mut R,
) -> Transformation {
    let mut f = Matrix::from_fn(2, n, |_, _| TransformPolynomial::zero(n));
    let mut g = Matrix::from_fn(2, 2, |_, _| TransformPolynomial::zero(n));
    for wt in f_lo.max(2)..=hi {
        for l in 0..=wt / 2 {
            let k = wt - 2 * l;
            if k < 2 {
                continue;
            }
            for b in 0..2 {
                let row: Vec<TransformPolynomial> = (0..n).map(|_| random_zw(n, k, l, density, rng).scale(scale)).collect();
                for (j, p) in canonical_f_row(&row, k, l).into_iter().enumerate() {
                    f.get_mut(b, j).add_assign_ref(&p);
                }
            }
        }
    }
    for wt in (f_lo + 1).max(3)..=hi {
        for l in 0..=wt / 2 {
            let k = wt - 2 * l;
            for a in 0..2 {
                for b in 0..2 {
                    let p = random_zw(n, k, l, density, rng).scale(scale);
                    let p = if l == 0 { p } else { canonical_g(&p, k, l) };
                    g.get_mut(a, b).add_assign_ref(&p);
                }
            }
        }
    }
    Transformation::from_corrections(&f, &g, hi)
}

/// `M` with `h(M)` equal to the model through degree `d_max`, solved degree
/// by degree from `G(Z, Φ) = F F̄ᵗ`.
pub fn model_preimage(h: &Transformation, d_max: u32) -> Result<ManifoldSpec, NormalFormError> {
    let n = h.n();
    let zero = Matrix::from_fn(2, 2, |_, _| BiPolynomial::zero(n));
    let mut e = zero.clone();
    for t in 3..=d_max {
        let spec = ManifoldSpec::new(n, t, e.clone(), false)?;
        let s = substituted_equation(&spec, h, &zero, t)?;
        for a in 0..2 {
            for b in 0..2 {
                e.get_mut(a, b).add_assign_ref(&s.get(a, b).homogeneous_part(t));
            }
        }
    }
    Ok(ManifoldSpec::new(n, d_max, e, false)?)
}

/// A random submanifold formally equivalent to the model with perturbation
/// order at least `d`.
pub fn random_model_equivalent<R: Rng>(
    n: usize,
    d: u32,
    map_degree: u32,
    d_max: u32,
    density: f64,
    scale: &GaussianRational,
    rng: &mut R,
) -> Result<(ManifoldSpec, Transformation), NormalFormError> {
    let h = random_normalized_map(n, d - 1, map_degree, density, scale, rng);
    Ok((model_preimage(&h, d_max)?, h))
}

/// The single-term family `t·φ_{2,1}`: `φ^{11}_{2,1} = t z11² z̄11` and its
/// conjugate in bidegree `(1,2)`.
pub fn phi21_family(n: usize, t: &GaussianRational, d_max: u32) -> ManifoldSpec {
    let z = BiPolynomial::z(n, 1, 1);
    let p = (&(&z * &z) * &BiPolynomial::zbar(n, 1, 1)).scale(t);
    let mut e = Matrix::from_fn(2, 2, |_, _| BiPolynomial::zero(n));
    *e.get_mut(0, 0) = p;
    ManifoldSpec::new(n, d_max, e, true).expect("valid by construction")
}

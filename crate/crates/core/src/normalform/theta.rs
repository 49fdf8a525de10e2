use crate::algebra::{conj_transpose, mat_mul_truncated, BiPolynomial, Matrix};
use crate::manifold::ManifoldSpec;

use super::equation::substitute_transformation;
use super::solve::normalize;
use super::{NormalFormError, Transformation};

/// Inverts `(Z, Z̄) ↦ (Z + f̃, Z̄ + conj f̃)` as formal series, treating `Z`
/// and `Z̄` as independent; `f̃` is a 2×N matrix of order ≥ 2. Returns the
/// `Z`-part `ζ` through total degree `trunc`; the `Z̄`-part is its conjugate.
pub fn invert_substitution(f_tilde: &Matrix<BiPolynomial>, trunc: u32) -> Matrix<BiPolynomial> {
    let n = f_tilde.cols();
    let id = Matrix::from_fn(2, n, |a, j| BiPolynomial::z(n, a + 1, j + 1));
    let mut zeta = id.clone();
    // each pass fixes one more degree: ζ_k is exact through degree k
    for k in 2..=trunc {
        let first = shifts_of(&zeta);
        let second: Vec<BiPolynomial> = first.iter().map(BiPolynomial::conjugate).collect();
        zeta = Matrix::from_fn(2, n, |a, j| id.get(a, j) - &f_tilde.get(a, j).truncate(k).compose_shift(&first, &second, k));
    }
    zeta
}

/// `ζ − Z`, flattened in variable order.
fn shifts_of(zeta: &Matrix<BiPolynomial>) -> Vec<BiPolynomial> {
    let n = zeta.cols();
    (0..2)
        .flat_map(|a| (0..n).map(move |j| (a, j)))
        .map(|(a, j)| zeta.get(a, j) - &BiPolynomial::z(n, a + 1, j + 1))
        .collect()
}

/// The image of `M` under `h`, through total degree `d_max`:
/// `W' = Z' Z̄'ᵗ + E'(Z', Z̄')`. Images need not satisfy reality.
pub fn transform_manifold(m: &ManifoldSpec, h: &Transformation, d_max: u32) -> Result<ManifoldSpec, NormalFormError> {
    if d_max > m.d_max() {
        return Err(NormalFormError::Truncation { requested: d_max, d_max: m.d_max() });
    }
    let n = m.n();
    let (fsub, gsub) = substitute_transformation(h, &m.phi(), d_max);
    let ffbar = mat_mul_truncated(&fsub, &conj_transpose(&fsub), d_max);
    // E' evaluated at (F, conj F)
    let e_pulled = Matrix::from_fn(2, 2, |a, b| gsub.get(a, b) - ffbar.get(a, b));
    let f_tilde = Matrix::from_fn(2, n, |a, j| fsub.get(a, j) - &BiPolynomial::z(n, a + 1, j + 1));
    let zeta = invert_substitution(&f_tilde, d_max);
    let first = shifts_of(&zeta);
    let second: Vec<BiPolynomial> = first.iter().map(BiPolynomial::conjugate).collect();
    let e = e_pulled.map(|p| p.compose_shift(&first, &second, d_max));
    Ok(ManifoldSpec::new(n, d_max, e, false)?)
}

#[derive(Clone, Debug)]
pub struct ThetaOutcome {
    pub manifold: ManifoldSpec,
    pub transform: Transformation,
    /// Order of the new perturbation; `None` when it vanishes to `d_max`.
    pub order: Option<u32>,
}

/// One degree-doubling step: normalize through degree `2d − 3`, transform,
/// and certify `order(E') ≥ 2d − 2` by scanning every bidegree.
pub fn theta_step(m: &ManifoldSpec, d: u32) -> Result<ThetaOutcome, NormalFormError> {
    assert!(d >= 3, "the perturbation is at least cubic");
    if let Some(o) = m.order() {
        if o < d {
            return Err(NormalFormError::Order { required: d, found: Some(o) });
        }
    }
    let target = 2 * d - 2;
    if m.d_max() < target {
        return Err(NormalFormError::Truncation { requested: target, d_max: m.d_max() });
    }
    let nf = normalize(m, 2 * d - 3)?;
    let transform = nf.transform.truncated(2 * d - 3);
    let image = transform_manifold(m, &transform, m.d_max())?;
    let order = image.e().iter().flat_map(|(_, p)| p.bidegrees()).map(|(a, b)| a + b).min();
    if order.is_some_and(|o| o < target) {
        return Err(NormalFormError::Doubling { expected: target, found: order });
    }
    Ok(ThetaOutcome { manifold: image, transform, order })
}

use crate::algebra::{conj_transpose, mat_mul_truncated, BiPolynomial, Matrix};
use crate::manifold::{substitute_block, ManifoldSpec};

use super::{NormalFormError, Transformation};

/// `(F(Z, Φ), G(Z, Φ))` truncated at total degree `trunc`.
pub fn substitute_transformation(
    h: &Transformation,
    phi: &Matrix<BiPolynomial>,
    trunc: u32,
) -> (Matrix<BiPolynomial>, Matrix<BiPolynomial>) {
    let h = h.truncated(h.wt_max().min(trunc));
    (substitute_block(h.f(), phi, trunc), substitute_block(h.g(), phi, trunc))
}

/// Applies `φ'` to `(F, conj F)`, where `fsub` is the 2×N matrix
/// `F(Z, Φ) = Z + O(2)`.
pub(crate) fn apply_to_map(phi_prime: &Matrix<BiPolynomial>, fsub: &Matrix<BiPolynomial>, trunc: u32) -> Matrix<BiPolynomial> {
    let n = fsub.cols();
    let first: Vec<BiPolynomial> = (0..2)
        .flat_map(|a| (0..n).map(move |j| (a, j)))
        .map(|(a, j)| fsub.get(a, j) - &BiPolynomial::z(n, a + 1, j + 1))
        .collect();
    let second: Vec<BiPolynomial> = first.iter().map(BiPolynomial::conjugate).collect();
    phi_prime.map(|p| if p.is_zero() { p.clone() } else { p.compose_shift(&first, &second, trunc) })
}

/// `F F̄ᵗ + φ'(F, F̄) − G(Z, Φ)` with `Φ = Z Z̄ᵗ + E`, through total degree
/// `trunc`. It vanishes exactly when `h` maps `M` onto
/// `W' = Z' Z̄'ᵗ + φ'(Z', Z̄')` to that order.
pub fn substituted_equation(
    m: &ManifoldSpec,
    h: &Transformation,
    phi_prime: &Matrix<BiPolynomial>,
    trunc: u32,
) -> Result<Matrix<BiPolynomial>, NormalFormError> {
    if trunc > m.d_max() {
        return Err(NormalFormError::Truncation { requested: trunc, d_max: m.d_max() });
    }
    let (fsub, gsub) = substitute_transformation(h, &m.phi(), trunc);
    let ffbar = mat_mul_truncated(&fsub, &conj_transpose(&fsub), trunc);
    let phi_f = apply_to_map(phi_prime, &fsub, trunc);
    Ok(Matrix::from_fn(2, 2, |a, b| &(ffbar.get(a, b) + phi_f.get(a, b)) - gsub.get(a, b)))
}

/// Bidegree-`(mm, nn)` part of [`substituted_equation`].
pub fn equation_residual(
    m: &ManifoldSpec,
    h: &Transformation,
    phi_prime: &Matrix<BiPolynomial>,
    mm: u32,
    nn: u32,
) -> Result<Matrix<BiPolynomial>, NormalFormError> {
    let full = substituted_equation(m, h, phi_prime, mm + nn)?;
    Ok(full.map(|p| p.bidegree_part(mm, nn)))
}

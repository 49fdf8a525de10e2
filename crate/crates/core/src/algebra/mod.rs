//! Exact polynomial arithmetic over the Gaussian rationals.

mod gaussian;
pub mod json;
pub use json::{PolynomialJson, TermJson};
mod matrix;
mod multi_index;
mod packed;
mod polynomial;

pub use gaussian::{format_rational, parse_rational, GaussianRational};
pub(crate) use gaussian::rational_to_f64;
pub use matrix::Matrix;
pub use multi_index::{compositions, MultiIndex};
pub use polynomial::{BiPolynomial, Block, Key, Polynomial, TransformPolynomial, ZZbar, ZW};

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AlgebraError {
    #[error("malformed rational {0:?}")]
    MalformedRational(String),
    #[error("arity mismatch: N = {left} vs N = {right}")]
    ArityMismatch { left: usize, right: usize },
    #[error("block mismatch: expected {expected:?}, found {found:?}")]
    BlockMismatch { expected: String, found: String },
    #[error("exponent vector of length {found}, expected {expected}")]
    ExponentLength { expected: usize, found: usize },
}

/// `Σ_k a_ik b_kj` truncated at degree `max`.
pub fn mat_mul_truncated(a: &Matrix<BiPolynomial>, b: &Matrix<BiPolynomial>, max: u32) -> Matrix<BiPolynomial> {
    assert_eq!(a.cols(), b.rows());
    let n = a.get(0, 0).n();
    Matrix::from_fn(a.rows(), b.cols(), |i, j| {
        let mut acc = BiPolynomial::zero(n);
        for k in 0..a.cols() {
            acc.add_assign_ref(&a.get(i, k).mul_truncated(b.get(k, j), max));
        }
        acc
    })
}

/// Entrywise conjugate transpose.
pub fn conj_transpose(a: &Matrix<BiPolynomial>) -> Matrix<BiPolynomial> {
    Matrix::from_fn(a.cols(), a.rows(), |i, j| a.get(j, i).conjugate())
}

pub fn mat_add(a: &Matrix<BiPolynomial>, b: &Matrix<BiPolynomial>) -> Matrix<BiPolynomial> {
    Matrix::from_fn(a.rows(), a.cols(), |i, j| a.get(i, j) + b.get(i, j))
}

pub fn mat_sub(a: &Matrix<BiPolynomial>, b: &Matrix<BiPolynomial>) -> Matrix<BiPolynomial> {
    Matrix::from_fn(a.rows(), a.cols(), |i, j| a.get(i, j) - b.get(i, j))
}

/// The column `Z = (z^1, z^2)ᵗ`, each `z^a` a row of length `N`, as a 2×N matrix.
pub fn z_matrix(n: usize) -> Matrix<BiPolynomial> {
    Matrix::from_fn(2, n, |a, j| BiPolynomial::z(n, a + 1, j + 1))
}

/// `Z Z̄ᵗ`, the model hyperquadric matrix with entries `⟨z^a, z^b⟩`.
pub fn model_phi(n: usize) -> Matrix<BiPolynomial> {
    let z = z_matrix(n);
    mat_mul_truncated(&z, &conj_transpose(&z), u32::MAX)
}

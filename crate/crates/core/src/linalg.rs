//! Exact dense linear algebra over the Gaussian rationals.

use num::{One, Zero};

use crate::algebra::GaussianRational as Q;

/// Solves `a·x = b` by reduced row echelon form, setting free variables
/// to zero. Returns `None` if the system is inconsistent, else the solution
/// and the rank of `a`.
pub fn solve_rref(a: &[Vec<Q>], b: &[Q]) -> Option<(Vec<Q>, usize)> {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut m: Vec<Vec<Q>> = a
        .iter()
        .zip(b)
        .map(|(r, bi)| {
            let mut row = r.clone();
            row.push(bi.clone());
            row
        })
        .collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = m[r][c].inv().expect("nonzero pivot");
        for x in m[r][c..].iter_mut() {
            *x = &*x * &inv;
        }
        let pivot_row = m[r].clone();
        for (i, row) in m.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (x, pv) in row[c..].iter_mut().zip(&pivot_row[c..]) {
                if !pv.is_zero() {
                    *x -= &(&f * pv);
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    if m[r..].iter().any(|row| !row[cols].is_zero()) {
        return None;
    }
    let mut x = vec![Q::zero(); cols];
    for (i, &c) in pivots.iter().enumerate() {
        x[c] = m[i][cols].clone();
    }
    Some((x, pivots.len()))
}

fn mat_vec(a: &[Vec<Q>], x: &[Q]) -> Vec<Q> {
    a.iter().map(|r| r.iter().zip(x).filter(|(c, _)| !c.is_zero()).map(|(c, v)| c * v).sum()).collect()
}

/// Minimum-Euclidean-norm solution of a consistent Hermitian positive
/// semidefinite system `g·x = b`.
///
/// Full rank is solved directly. Otherwise `g²y = b` is solved and
/// `x = g·y` is returned, which lies in the range of `g` and is therefore
/// the minimum-norm solution.
pub fn solve_hermitian_min_norm(g: &[Vec<Q>], b: &[Q]) -> Option<Vec<Q>> {
    let n = g.len();
    if n == 0 {
        return Some(Vec::new());
    }
    let (x, rank) = solve_rref(g, b)?;
    if rank == n {
        return Some(x);
    }
    let g2: Vec<Vec<Q>> = (0..n)
        .map(|i| (0..n).map(|j| (0..n).map(|k| &g[i][k] * &g[k][j]).sum()).collect())
        .collect();
    let (y, _) = solve_rref(&g2, b)?;
    Some(mat_vec(g, &y))
}

pub fn identity(n: usize) -> Vec<Vec<Q>> {
    (0..n).map(|i| (0..n).map(|j| if i == j { Q::one() } else { Q::zero() }).collect()).collect()
}

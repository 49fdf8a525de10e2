//! Sup norms on polydiscs, bracketed from both sides.
//!
//! A holomorphic polynomial attains its supremum over a polydisc on the
//! distinguished boundary. Sampling random phases there gives lower bounds;
//! the sum `Σ|c|·ρ^α` over coefficients gives an upper bound. The sampler
//! draws one fixed-seed stream, so lower bounds are monotone in the sample
//! count.

use num::complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{Block, Matrix, Polynomial};

/// Seed of the torus sampler unless a report names another.
pub const DEFAULT_SEED: u64 = 0x5eed_f15c;

/// Float image of a polynomial with exponents over all variables.
#[derive(Clone, Debug)]
pub struct FloatPoly {
    pub nvars: usize,
    pub terms: Vec<(Vec<u32>, Complex64)>,
}

impl FloatPoly {
    pub fn from_poly<K: Block>(p: &Polynomial<K>) -> Self {
        let nvars = p.first_arity() + p.second_arity();
        let terms = p
            .terms()
            .map(|((a, b), c)| (a.iter().chain(b.iter()).collect(), c.to_complex64()))
            .collect();
        FloatPoly { nvars, terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, x: &[Complex64]) -> Complex64 {
        self.terms
            .iter()
            .map(|(e, c)| e.iter().zip(x).fold(*c, |m, (&k, xi)| if k == 0 { m } else { m * xi.powu(k) }))
            .sum()
    }

    /// `Σ |c| Π radius_v^{e_v}`.
    pub fn coefficient_bound(&self, radii: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| e.iter().zip(radii).fold(c.norm(), |m, (&k, r)| m * r.powi(k as i32)))
            .fold(0.0, |a, b| a + b)
    }

    pub fn diff(&self, v: usize) -> Self {
        let terms = self
            .terms
            .iter()
            .filter(|(e, _)| e[v] > 0)
            .map(|(e, c)| {
                let mut e2 = e.clone();
                e2[v] -= 1;
                (e2, c * e[v] as f64)
            })
            .collect();
        FloatPoly { nvars: self.nvars, terms }
    }

    /// Terms whose total (unweighted) degree exceeds `d`.
    pub fn tail_above(&self, d: u32) -> Self {
        let terms = self.terms.iter().filter(|(e, _)| e.iter().sum::<u32>() > d).cloned().collect();
        FloatPoly { nvars: self.nvars, terms }
    }
}

/// Points on the distinguished boundary `|x_v| = radius_v`; the first
/// point has all phases zero.
pub struct TorusSampler {
    rng: ChaCha8Rng,
    radii: Vec<f64>,
    first: bool,
}

impl TorusSampler {
    pub fn new(radii: Vec<f64>, seed: u64) -> Self {
        TorusSampler { rng: ChaCha8Rng::seed_from_u64(seed), radii, first: true }
    }

    pub fn next_point(&mut self) -> Vec<Complex64> {
        if std::mem::take(&mut self.first) {
            return self.radii.iter().map(|&r| Complex64::new(r, 0.0)).collect();
        }
        let rng = &mut self.rng;
        self.radii
            .iter()
            .map(|&r| Complex64::from_polar(r, rng.gen_range(0.0..std::f64::consts::TAU)))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupBounds {
    pub lower: f64,
    pub upper: f64,
}

impl SupBounds {
    pub const ZERO: SupBounds = SupBounds { lower: 0.0, upper: 0.0 };

    pub fn max(self, o: SupBounds) -> SupBounds {
        SupBounds { lower: self.lower.max(o.lower), upper: self.upper.max(o.upper) }
    }
}

/// Sup of `|f_i|` for each `f_i` in `polys`, sampled at the same points.
pub fn sup_bounds_many(polys: &[FloatPoly], radii: &[f64], samples: usize, seed: u64) -> Vec<SupBounds> {
    let mut out: Vec<SupBounds> =
        polys.iter().map(|p| SupBounds { lower: 0.0, upper: p.coefficient_bound(radii) }).collect();
    if polys.iter().all(FloatPoly::is_zero) {
        return out;
    }
    let mut sampler = TorusSampler::new(radii.to_vec(), seed);
    for _ in 0..samples.max(1) {
        let x = sampler.next_point();
        for (b, p) in out.iter_mut().zip(polys) {
            if !p.is_zero() {
                b.lower = b.lower.max(p.eval(&x).norm());
            }
        }
    }
    // rounding can push a tight sample a hair above the coefficient sum
    for b in &mut out {
        b.lower = b.lower.min(b.upper);
    }
    out
}

/// `Σ_v |∂_v f|` bracketed over the torus, the ℓ¹ gradient norm that
/// bounds the Lipschitz constant of `f` in the max norm.
pub fn gradient_bounds(p: &FloatPoly, radii: &[f64], samples: usize, seed: u64) -> SupBounds {
    let parts: Vec<FloatPoly> = (0..p.nvars).map(|v| p.diff(v)).collect();
    let upper = parts.iter().map(|d| d.coefficient_bound(radii)).fold(0.0, |a, b| a + b);
    if parts.iter().all(FloatPoly::is_zero) {
        return SupBounds::ZERO;
    }
    let mut sampler = TorusSampler::new(radii.to_vec(), seed);
    let mut lower: f64 = 0.0;
    for _ in 0..samples.max(1) {
        let x = sampler.next_point();
        lower = lower.max(parts.iter().map(|d| d.eval(&x).norm()).fold(0.0, |a, b| a + b));
    }
    SupBounds { lower: lower.min(upper), upper }
}

/// Radii of `D_r`: every `z_{ij}` and `ξ_{ij}` at `r`.
pub fn bidisc_radii(n: usize, r: f64) -> Vec<f64> {
    vec![r; 4 * n]
}

/// Radii of `Δ_r`: `|z_{ij}| = r`, `|w_{αβ}| = √N r`.
pub fn transform_radii(n: usize, r: f64) -> Vec<f64> {
    let mut v = vec![r; 2 * n];
    v.extend([(n as f64).sqrt() * r; 4]);
    v
}

/// `‖p‖_r` over `D_r`, treating `Z̄` as the independent `ξ`.
pub fn sup_norm_bounds<K: Block>(p: &Polynomial<K>, r: f64, samples: usize) -> (f64, f64) {
    sup_norm_bounds_seeded(p, r, samples, DEFAULT_SEED)
}

pub fn sup_norm_bounds_seeded<K: Block>(p: &Polynomial<K>, r: f64, samples: usize, seed: u64) -> (f64, f64) {
    assert!(r > 0.0 && samples >= 1);
    let f = FloatPoly::from_poly(p);
    let radii = vec![r; f.nvars];
    let b = sup_bounds_many(&[f], &radii, samples, seed)[0];
    (b.lower, b.upper)
}

/// Max over the entries of a matrix of bipolynomials on `D_r`.
pub fn matrix_sup_bounds(e: &Matrix<crate::algebra::BiPolynomial>, r: f64, samples: usize, seed: u64) -> SupBounds {
    let n = e.get(0, 0).n();
    let polys: Vec<FloatPoly> = e.iter().map(|(_, p)| FloatPoly::from_poly(p)).collect();
    sup_bounds_many(&polys, &bidisc_radii(n, r), samples, seed).into_iter().fold(SupBounds::ZERO, SupBounds::max)
}

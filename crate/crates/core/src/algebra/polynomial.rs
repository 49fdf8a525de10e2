//! Sparse polynomials over two variable blocks.
//!
//! A term is keyed by a pair of exponent vectors. For [`BiPolynomial`] the
//! blocks are `Z = (z11..z1N, z21..z2N)` and its conjugate `Z̄`, both of
//! arity `2N`; for [`TransformPolynomial`] they are `Z` and
//! `W = (w11, w12, w21, w22)`. Variable `z_{aj}` (1-based) sits at index
//! `(a-1)·N + (j-1)`, `w_{ab}` at `2(a-1) + (b-1)`.

use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Debug};
use std::marker::PhantomData;
use std::rc::Rc;

use num::complex::Complex64;
use num::{One, Zero};

use super::packed::{self, IntPoly};
use super::{AlgebraError, GaussianRational, Matrix, MultiIndex};

pub type Key = (MultiIndex, MultiIndex);

/// Marker for the pair of variable blocks a polynomial lives on.
pub trait Block: Copy + Clone + Debug + PartialEq + Eq + Default + 'static {
    /// Name used in the JSON form.
    const NAME: &'static str;
    /// Weight of one second-block variable in the degree count.
    const SECOND_WEIGHT: u32;
    fn second_arity(n: usize) -> usize;
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Default)]
pub struct ZZbar;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Default)]
pub struct ZW;

impl Block for ZZbar {
    const NAME: &'static str = "zzbar";
    const SECOND_WEIGHT: u32 = 1;
    fn second_arity(n: usize) -> usize {
        2 * n
    }
}

impl Block for ZW {
    const NAME: &'static str = "zw";
    const SECOND_WEIGHT: u32 = 2;
    fn second_arity(_n: usize) -> usize {
        4
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct Polynomial<K: Block> {
    n: usize,
    terms: BTreeMap<Key, GaussianRational>,
    _block: PhantomData<K>,
}

/// Polynomial in `(Z, Z̄)`; degree is the total degree.
pub type BiPolynomial = Polynomial<ZZbar>;
/// Polynomial in `(Z, W)`; degree is the weighted degree `|I| + 2|J|`.
pub type TransformPolynomial = Polynomial<ZW>;

fn degree_of<K: Block>(k: &Key) -> u32 {
    k.0.degree() + K::SECOND_WEIGHT * k.1.degree()
}

impl<K: Block> Polynomial<K> {
    pub fn zero(n: usize) -> Self {
        assert!(n >= 1, "N must be positive");
        Self { n, terms: BTreeMap::new(), _block: PhantomData }
    }

    pub fn constant(n: usize, c: GaussianRational) -> Self {
        let mut p = Self::zero(n);
        p.add_term(MultiIndex::zeros(2 * n), MultiIndex::zeros(K::second_arity(n)), c);
        p
    }

    pub fn one(n: usize) -> Self {
        Self::constant(n, GaussianRational::one())
    }

    pub fn monomial(n: usize, first: MultiIndex, second: MultiIndex, c: GaussianRational) -> Self {
        let mut p = Self::zero(n);
        p.add_term(first, second, c);
        p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn first_arity(&self) -> usize {
        2 * self.n
    }

    pub fn second_arity(&self) -> usize {
        K::second_arity(self.n)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Key, &GaussianRational)> {
        self.terms.iter()
    }

    pub fn coeff(&self, first: &MultiIndex, second: &MultiIndex) -> GaussianRational {
        self.terms
            .get(&(first.clone(), second.clone()))
            .cloned()
            .unwrap_or_else(GaussianRational::zero)
    }

    /// Accumulates `c` into the coefficient of `(first, second)`.
    pub fn add_term(&mut self, first: MultiIndex, second: MultiIndex, c: GaussianRational) {
        assert_eq!(first.len(), self.first_arity(), "first block arity");
        assert_eq!(second.len(), self.second_arity(), "second block arity");
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry((first, second)) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += &c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    fn from_map(n: usize, map: HashMap<Key, GaussianRational>) -> Self {
        let terms = map.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        Self { n, terms, _block: PhantomData }
    }

    pub fn term_degree(k: &Key) -> u32 {
        degree_of::<K>(k)
    }

    /// Lowest degree of a nonzero term; `None` for the zero polynomial,
    /// standing for `+∞`.
    pub fn order(&self) -> Option<u32> {
        self.terms.keys().map(degree_of::<K>).min()
    }

    pub fn max_degree(&self) -> Option<u32> {
        self.terms.keys().map(degree_of::<K>).max()
    }

    /// Keeps terms satisfying the predicate.
    pub fn filter(&self, mut keep: impl FnMut(&Key) -> bool) -> Self {
        Self {
            n: self.n,
            terms: self.terms.iter().filter(|(k, _)| keep(k)).map(|(k, c)| (k.clone(), c.clone())).collect(),
            _block: PhantomData,
        }
    }

    /// `J^D`: drops every term of degree above `max`.
    pub fn truncate(&self, max: u32) -> Self {
        self.filter(|k| degree_of::<K>(k) <= max)
    }

    pub fn homogeneous_part(&self, d: u32) -> Self {
        self.filter(|k| degree_of::<K>(k) == d)
    }

    pub fn map_coeffs(&self, f: impl Fn(&GaussianRational) -> GaussianRational) -> Self {
        let mut out = Self::zero(self.n);
        for ((a, b), c) in &self.terms {
            out.add_term(a.clone(), b.clone(), f(c));
        }
        out
    }

    pub fn scale(&self, s: &GaussianRational) -> Self {
        if s.is_zero() {
            return Self::zero(self.n);
        }
        self.map_coeffs(|c| c * s)
    }

    fn check_arity(&self, o: &Self) -> Result<(), AlgebraError> {
        if self.n != o.n {
            return Err(AlgebraError::ArityMismatch { left: self.n, right: o.n });
        }
        Ok(())
    }

    pub fn try_add(&self, o: &Self) -> Result<Self, AlgebraError> {
        self.check_arity(o)?;
        let mut out = self.clone();
        out.add_assign_ref(o);
        Ok(out)
    }

    pub fn try_mul(&self, o: &Self) -> Result<Self, AlgebraError> {
        self.check_arity(o)?;
        Ok(self.mul_truncated(o, u32::MAX))
    }

    pub fn add_assign_ref(&mut self, o: &Self) {
        assert_eq!(self.n, o.n, "N mismatch");
        for ((a, b), c) in &o.terms {
            self.add_term(a.clone(), b.clone(), c.clone());
        }
    }

    pub fn sub_assign_ref(&mut self, o: &Self) {
        assert_eq!(self.n, o.n, "N mismatch");
        for ((a, b), c) in &o.terms {
            self.add_term(a.clone(), b.clone(), -c);
        }
    }

    /// Product with every term of degree above `max` discarded.
    pub fn mul_truncated(&self, o: &Self, max: u32) -> Self {
        self.mul_range(o, 0, max)
    }

    /// Product keeping only the terms of degree in `lo..=hi`.
    pub fn mul_range(&self, o: &Self, lo: u32, hi: u32) -> Self {
        assert_eq!(self.n, o.n, "N mismatch");
        if self.is_zero() || o.is_zero() || lo > hi {
            return Self::zero(self.n);
        }
        if self.first_arity() + self.second_arity() <= packed::MAX_VARS {
            if let Some(p) = self.mul_packed(o, lo, hi) {
                return p;
            }
        }
        let mut right: Vec<(u32, &Key, &GaussianRational)> =
            o.terms.iter().map(|(k, c)| (degree_of::<K>(k), k, c)).collect();
        right.sort_by_key(|t| t.0);
        let mut acc: HashMap<Key, GaussianRational> = HashMap::new();
        for (ka, ca) in &self.terms {
            let da = degree_of::<K>(ka);
            if da > hi {
                continue;
            }
            for &(db, kb, cb) in &right {
                if da + db > hi {
                    break;
                }
                if da + db < lo {
                    continue;
                }
                let key = (ka.0.add(&kb.0), ka.1.add(&kb.1));
                let prod = ca * cb;
                match acc.get_mut(&key) {
                    Some(v) => *v += &prod,
                    None => {
                        acc.insert(key, prod);
                    }
                }
            }
        }
        Self::from_map(self.n, acc)
    }

    /// Packed integer form of the terms of degree `≤ hi`, when every
    /// exponent fits its lane.
    pub(crate) fn to_int(&self, hi: u32) -> Option<IntPoly> {
        if self.first_arity() + self.second_arity() > packed::MAX_VARS {
            return None;
        }
        let mut v = Vec::with_capacity(self.terms.len());
        for (k, c) in &self.terms {
            if degree_of::<K>(k) <= hi {
                v.push((packed::pack(&k.0, &k.1)?, c));
            }
        }
        Some(IntPoly::from_terms(self.first_arity(), K::SECOND_WEIGHT, v.into_iter()))
    }

    pub(crate) fn from_int(n: usize, p: &IntPoly) -> Self {
        let (la, lb) = (2 * n, K::second_arity(n));
        let terms = p.to_terms().map(|(code, c)| (packed::unpack(code, la, lb), c)).collect();
        Self { n, terms, _block: PhantomData }
    }

    fn mul_packed(&self, o: &Self, lo: u32, hi: u32) -> Option<Self> {
        // result exponents must fit their 8-bit lanes
        let top = self.max_degree()? + o.max_degree()?;
        if top.min(hi) > 255 {
            return None;
        }
        let (l, r) = (self.to_int(hi)?, o.to_int(hi)?);
        Some(Self::from_int(self.n, &l.mul(&r, lo, hi)))
    }

    pub fn pow_truncated(&self, e: u32, max: u32) -> Self {
        let mut out = Self::one(self.n).truncate(max);
        for _ in 0..e {
            out = out.mul_truncated(self, max);
        }
        out
    }

    /// `∂/∂x` for the first-block variable at `var`.
    pub fn diff_first(&self, var: usize) -> Self {
        let mut out = Self::zero(self.n);
        for ((a, b), c) in &self.terms {
            let e = a.get(var);
            if e > 0 {
                let mut a2 = a.clone();
                a2.set(var, e - 1);
                out.add_term(a2, b.clone(), c.scale_int(&e.into()));
            }
        }
        out
    }

    /// `∂/∂y` for the second-block variable at `var`.
    pub fn diff_second(&self, var: usize) -> Self {
        let mut out = Self::zero(self.n);
        for ((a, b), c) in &self.terms {
            let e = b.get(var);
            if e > 0 {
                let mut b2 = b.clone();
                b2.set(var, e - 1);
                out.add_term(a.clone(), b2, c.scale_int(&e.into()));
            }
        }
        out
    }

    /// Mixed derivative `∂^α_x ∂^β_y`.
    pub fn diff_multi(&self, alpha: &MultiIndex, beta: &MultiIndex) -> Self {
        let mut out = Self::zero(self.n);
        for ((a, b), c) in &self.terms {
            if let (Some(a2), Some(b2)) = (a.checked_sub(alpha), b.checked_sub(beta)) {
                let k = a.falling_factorial(alpha) * b.falling_factorial(beta);
                out.add_term(a2, b2, c.scale_int(&k));
            }
        }
        out
    }

    /// Floating-point evaluation at the given first/second block values.
    pub fn eval(&self, first: &[Complex64], second: &[Complex64]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for ((a, b), c) in &self.terms {
            let mut m = c.to_complex64();
            for (i, e) in a.iter().enumerate() {
                if e > 0 {
                    m *= first[i].powu(e);
                }
            }
            for (i, e) in b.iter().enumerate() {
                if e > 0 {
                    m *= second[i].powu(e);
                }
            }
            acc += m;
        }
        acc
    }

    /// Exact evaluation at Gaussian-rational points.
    pub fn eval_exact(&self, first: &[GaussianRational], second: &[GaussianRational]) -> GaussianRational {
        let mut acc = GaussianRational::zero();
        for ((a, b), c) in &self.terms {
            let mut m = c.clone();
            for (i, e) in a.iter().enumerate() {
                for _ in 0..e {
                    m = &m * &first[i];
                }
            }
            for (i, e) in b.iter().enumerate() {
                for _ in 0..e {
                    m = &m * &second[i];
                }
            }
            acc += &m;
        }
        acc
    }

    /// Substitutes every variable by a [`BiPolynomial`]: first-block
    /// variable `i` by `first[i]`, second-block variable `j` by `second[j]`,
    /// truncating the expansion at total degree `max`.
    pub fn compose(&self, first: &[BiPolynomial], second: &[BiPolynomial], max: u32) -> BiPolynomial {
        assert_eq!(first.len(), self.first_arity());
        assert_eq!(second.len(), self.second_arity());
        let subs: Vec<&BiPolynomial> = first.iter().chain(second.iter()).collect();
        let n_out = subs.first().map(|p| p.n()).unwrap_or(self.n);
        let orders: Vec<u32> = subs.iter().map(|p| p.order().unwrap_or(u32::MAX / 4)).collect();
        let mut caches: Vec<Vec<Rc<BiPolynomial>>> =
            subs.iter().map(|_| vec![Rc::new(BiPolynomial::one(n_out))]).collect();
        let nv = subs.len();
        let mut result = BiPolynomial::zero(n_out);
        // prefix[v] = product of substituted powers for variables < v
        let mut prefix: Vec<Rc<BiPolynomial>> = vec![Rc::new(BiPolynomial::one(n_out)); nv + 1];
        let mut prefix_ord: Vec<u64> = vec![0; nv + 1];
        let mut last: Option<Vec<u32>> = None;
        for ((a, b), c) in &self.terms {
            let exps: Vec<u32> = a.iter().chain(b.iter()).collect();
            let start = match &last {
                Some(prev) => prev.iter().zip(&exps).position(|(x, y)| x != y).unwrap_or(nv),
                None => 0,
            };
            for v in start..nv {
                let e = exps[v];
                let ord = prefix_ord[v] + e as u64 * orders[v] as u64;
                prefix_ord[v + 1] = ord;
                if e == 0 {
                    prefix[v + 1] = prefix[v].clone();
                    continue;
                }
                if ord > max as u64 || prefix[v].is_zero() {
                    prefix[v + 1] = Rc::new(BiPolynomial::zero(n_out));
                    continue;
                }
                let cache = &mut caches[v];
                while cache.len() <= e as usize {
                    let next = cache.last().unwrap().mul_truncated(subs[v], max);
                    cache.push(Rc::new(next));
                }
                prefix[v + 1] = Rc::new(prefix[v].mul_truncated(&cache[e as usize], max));
            }
            last = Some(exps);
            if !prefix[nv].is_zero() {
                for ((pa, pb), pc) in prefix[nv].terms() {
                    result.add_term(pa.clone(), pb.clone(), pc * c);
                }
            }
        }
        result
    }
}

impl BiPolynomial {
    /// `z_{a j}` with 1-based `a ∈ {1,2}`, `j ∈ 1..=N`.
    pub fn z(n: usize, a: usize, j: usize) -> Self {
        Self::monomial(n, MultiIndex::unit(2 * n, (a - 1) * n + (j - 1)), MultiIndex::zeros(2 * n), GaussianRational::one())
    }

    /// `z̄_{a j}`.
    pub fn zbar(n: usize, a: usize, j: usize) -> Self {
        Self::monomial(n, MultiIndex::zeros(2 * n), MultiIndex::unit(2 * n, (a - 1) * n + (j - 1)), GaussianRational::one())
    }

    /// Swaps the `Z` and `Z̄` exponents of every term and conjugates the
    /// coefficients.
    pub fn conjugate(&self) -> Self {
        let mut out = Self::zero(self.n);
        for ((a, b), c) in &self.terms {
            out.add_term(b.clone(), a.clone(), c.conj());
        }
        out
    }

    pub fn bidegree_part(&self, m: u32, n: u32) -> Self {
        self.filter(|(a, b)| a.degree() == m && b.degree() == n)
    }

    /// `Some((m, n))` when every term has bidegree `(m, n)`; the zero
    /// polynomial is bihomogeneous of every bidegree and yields `None`.
    pub fn bidegree(&self) -> Option<(u32, u32)> {
        let mut it = self.terms.keys().map(|(a, b)| (a.degree(), b.degree()));
        let first = it.next()?;
        if it.all(|d| d == first) {
            Some(first)
        } else {
            None
        }
    }

    pub fn is_bihomogeneous(&self, m: u32, n: u32) -> bool {
        self.terms.keys().all(|(a, b)| a.degree() == m && b.degree() == n)
    }

    /// Distinct bidegrees present, sorted.
    pub fn bidegrees(&self) -> Vec<(u32, u32)> {
        let mut v: Vec<_> = self.terms.keys().map(|(a, b)| (a.degree(), b.degree())).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Substitutes variables of a bipolynomial in `(Z', Z̄')`.
    pub fn substitute(&self, z: &[BiPolynomial], zbar: &[BiPolynomial], max: u32) -> BiPolynomial {
        self.compose(z, zbar, max)
    }

    /// `p(Z + h, Z̄ + k)` through total degree `max`, by the Taylor expansion
    /// `Σ_α ∂^α p / α! · (h, k)^α`. Cheap when the shifts have order ≥ 2,
    /// since then only `|α| ≤ max − ord(p)` contributes.
    pub fn compose_shift(&self, h: &[BiPolynomial], k: &[BiPolynomial], max: u32) -> BiPolynomial {
        let nv = 2 * self.first_arity();
        assert_eq!(h.len() + k.len(), nv);
        let shifts: Vec<&BiPolynomial> = h.iter().chain(k.iter()).collect();
        let shift_ord: Vec<u32> = shifts.iter().map(|s| s.order().unwrap_or(u32::MAX / 4)).collect();
        let p = self.truncate(max);
        let Some(ord_p) = p.order() else { return Self::zero(self.n) };
        if max <= 255 && shift_ord.iter().all(|&o| o >= 1) {
            let ints: Option<Vec<IntPoly>> = shifts.iter().map(|s| s.to_int(max)).collect();
            if let (Some(pi), Some(si)) = (p.to_int(max), ints) {
                let mut out = IntPoly::zero(pi.la, 1);
                let mut alpha = vec![0u32; nv];
                let one = IntPoly::one(pi.la, 1);
                let deg_p = p.max_degree().unwrap_or(0);
                let ctx = ShiftCtx { shifts: &si, shift_ord: &shift_ord, ord_p, deg_p, max };
                shift_rec_int(&ctx, &pi, 0, 0, 0, &mut alpha, &one, &mut out);
                return Self::from_int(self.n, &out);
            }
        }
        let mut out = Self::zero(self.n);
        let mut alpha = vec![0u32; nv];
        let one = Self::one(self.n);
        let deg_p = p.max_degree().unwrap_or(0);
        shift_rec(&p, &shifts, &shift_ord, ord_p, deg_p, max, 0, 0, 0, &mut alpha, &one, &mut out);
        out
    }
}

struct ShiftCtx<'a> {
    shifts: &'a [IntPoly],
    shift_ord: &'a [u32],
    ord_p: u32,
    deg_p: u32,
    max: u32,
}

/// Packed form of [`shift_rec`]; `t` is the Taylor coefficient at `alpha`.
fn shift_rec_int(ctx: &ShiftCtx, t: &IntPoly, start: usize, len: u32, pow_ord: u32, alpha: &mut Vec<u32>, pow: &IntPoly, out: &mut IntPoly) {
    if !t.is_zero() {
        out.add_assign(&t.mul(pow, 0, ctx.max));
    }
    for v in start..ctx.shifts.len() {
        let new_len = len + 1;
        let new_ord = pow_ord as u64 + ctx.shift_ord[v] as u64;
        let min_rest = ctx.ord_p.saturating_sub(new_len) as u64;
        if new_len > ctx.deg_p || new_ord + min_rest > ctx.max as u64 {
            continue;
        }
        // every descendant differentiates the child, so a zero child ends the branch
        let child = t.taylor_step(v, alpha[v], ctx.max - new_ord as u32);
        if child.is_zero() {
            continue;
        }
        let new_pow = pow.mul(&ctx.shifts[v], 0, ctx.max - min_rest as u32);
        if new_pow.is_zero() {
            continue;
        }
        alpha[v] += 1;
        shift_rec_int(ctx, &child, v, new_len, new_ord as u32, alpha, &new_pow, out);
        alpha[v] -= 1;
    }
}

/// `∂^α p / α!` restricted to terms of degree `≤ keep`.
fn taylor_coefficient(p: &BiPolynomial, alpha: &[u32], keep: u32) -> BiPolynomial {
    let fa = alpha.len() / 2;
    let (a1, a2) = (MultiIndex::from_slice(&alpha[..fa]), MultiIndex::from_slice(&alpha[fa..]));
    let a_fact = a1.factorial() * a2.factorial();
    let mut out = BiPolynomial::zero(p.n);
    for ((a, b), c) in &p.terms {
        if let (Some(ra), Some(rb)) = (a.checked_sub(&a1), b.checked_sub(&a2)) {
            if ra.degree() + rb.degree() > keep {
                continue;
            }
            let binom = (a.falling_factorial(&a1) * b.falling_factorial(&a2)) / &a_fact;
            out.add_term(ra, rb, c.scale_int(&binom));
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn shift_rec(
    p: &BiPolynomial,
    shifts: &[&BiPolynomial],
    shift_ord: &[u32],
    ord_p: u32,
    deg_p: u32,
    max: u32,
    start: usize,
    len: u32,
    pow_ord: u32,
    alpha: &mut Vec<u32>,
    pow: &BiPolynomial,
    out: &mut BiPolynomial,
) {
    // remaining degree budget for the derivative factor
    let keep = max - pow_ord;
    let coeff = taylor_coefficient(p, alpha, keep);
    if !coeff.is_zero() {
        out.add_assign_ref(&coeff.mul_truncated(pow, max));
    }
    for v in start..shifts.len() {
        let new_len = len + 1;
        let new_ord = pow_ord as u64 + shift_ord[v] as u64;
        // the derivative keeps degree ≥ ord_p − |α| (or 0), so we need
        // max(ord_p − |α|, 0) + ord(h^α) ≤ max
        let min_rest = ord_p.saturating_sub(new_len) as u64;
        if new_len > deg_p || new_ord + min_rest > max as u64 || shifts[v].is_zero() {
            continue;
        }
        let new_pow = pow.mul_truncated(shifts[v], max - min_rest as u32);
        if new_pow.is_zero() {
            continue;
        }
        alpha[v] += 1;
        shift_rec(p, shifts, shift_ord, ord_p, deg_p, max, v, new_len, new_ord as u32, alpha, &new_pow, out);
        alpha[v] -= 1;
    }
}

impl TransformPolynomial {
    pub fn z(n: usize, a: usize, j: usize) -> Self {
        Self::monomial(n, MultiIndex::unit(2 * n, (a - 1) * n + (j - 1)), MultiIndex::zeros(4), GaussianRational::one())
    }

    /// `w_{a b}` with 1-based indices.
    pub fn w(n: usize, a: usize, b: usize) -> Self {
        Self::monomial(n, MultiIndex::zeros(2 * n), MultiIndex::unit(4, 2 * (a - 1) + (b - 1)), GaussianRational::one())
    }

    /// Minimum of `z-degree + 2·w-degree` over the terms; `None` is `+∞`.
    pub fn weighted_order(&self) -> Option<u32> {
        self.order()
    }

    /// Part with the given z-degree and w-degree.
    pub fn zw_part(&self, zdeg: u32, wdeg: u32) -> Self {
        self.filter(|(a, b)| a.degree() == zdeg && b.degree() == wdeg)
    }

    /// Replaces `w_{αβ}` by `phi[(α, β)]` and keeps `Z`, truncating at total
    /// degree `max` in `(Z, Z̄)`.
    pub fn substitute_w(&self, phi: &Matrix<BiPolynomial>, max: u32) -> BiPolynomial {
        assert!(phi.rows() == 2 && phi.cols() == 2, "phi must be 2x2");
        let n = self.n;
        let ws: Vec<&BiPolynomial> = (0..2).flat_map(|a| (0..2).map(move |b| (a, b))).map(|(a, b)| phi.get(a, b)).collect();
        // g(Z, Φ) = Σ_J g_J(Z) Φ^J
        let mut groups: BTreeMap<MultiIndex, BiPolynomial> = BTreeMap::new();
        for ((a, w), c) in &self.terms {
            if a.degree() <= max {
                let zero = MultiIndex::zeros(2 * n);
                groups.entry(w.clone()).or_insert_with(|| BiPolynomial::zero(n)).add_term(a.clone(), zero, c.clone());
            }
        }
        let min_z = groups.values().filter_map(|g| g.order()).min().unwrap_or(0);
        let room = max.saturating_sub(min_z);
        if max <= 255 {
            let ints: Option<Vec<IntPoly>> = ws.iter().map(|p| p.to_int(room)).collect();
            if let Some(ws) = ints {
                let mut powers: HashMap<MultiIndex, Rc<IntPoly>> = HashMap::new();
                powers.insert(MultiIndex::zeros(4), Rc::new(IntPoly::one(2 * n, 1)));
                let mut out = IntPoly::zero(2 * n, 1);
                for (w, g) in &groups {
                    let pw = w_power_int(w, &ws, room, &mut powers);
                    let gi = g.to_int(max).expect("same arity as phi");
                    out.add_assign(&gi.mul(&pw, 0, max));
                }
                return BiPolynomial::from_int(n, &out);
            }
        }
        let mut powers: HashMap<MultiIndex, Rc<BiPolynomial>> = HashMap::new();
        powers.insert(MultiIndex::zeros(4), Rc::new(BiPolynomial::one(n)));
        let mut out = BiPolynomial::zero(n);
        for (w, g) in &groups {
            let pw = w_power(w, &ws, room, &mut powers);
            out.add_assign_ref(&g.mul_truncated(&pw, max));
        }
        out
    }
}

fn w_power_int(w: &MultiIndex, ws: &[IntPoly], max: u32, cache: &mut HashMap<MultiIndex, Rc<IntPoly>>) -> Rc<IntPoly> {
    if let Some(p) = cache.get(w) {
        return p.clone();
    }
    let v = (0..w.len()).rev().find(|&i| w.get(i) > 0).expect("zero exponent is cached");
    let mut lower = w.clone();
    lower.set(v, w.get(v) - 1);
    let base = w_power_int(&lower, ws, max, cache);
    let p = Rc::new(base.mul(&ws[v], 0, max));
    cache.insert(w.clone(), p.clone());
    p
}

/// `Φ^J` through degree `max`, memoized over the exponents reached.
fn w_power(
    w: &MultiIndex,
    ws: &[&BiPolynomial],
    max: u32,
    cache: &mut HashMap<MultiIndex, Rc<BiPolynomial>>,
) -> Rc<BiPolynomial> {
    if let Some(p) = cache.get(w) {
        return p.clone();
    }
    let v = (0..w.len()).rev().find(|&i| w.get(i) > 0).expect("zero exponent is cached");
    let mut lower = w.clone();
    lower.set(v, w.get(v) - 1);
    let base = w_power(&lower, ws, max, cache);
    let p = Rc::new(base.mul_truncated(ws[v], max));
    cache.insert(w.clone(), p.clone());
    p
}

impl<K: Block> std::ops::Add for &Polynomial<K> {
    type Output = Polynomial<K>;
    fn add(self, o: &Polynomial<K>) -> Polynomial<K> {
        self.try_add(o).expect("arity mismatch in polynomial addition")
    }
}

impl<K: Block> std::ops::Sub for &Polynomial<K> {
    type Output = Polynomial<K>;
    fn sub(self, o: &Polynomial<K>) -> Polynomial<K> {
        let mut out = self.clone();
        out.sub_assign_ref(o);
        out
    }
}

impl<K: Block> std::ops::Mul for &Polynomial<K> {
    type Output = Polynomial<K>;
    fn mul(self, o: &Polynomial<K>) -> Polynomial<K> {
        self.try_mul(o).expect("arity mismatch in polynomial multiplication")
    }
}

impl<K: Block> std::ops::Neg for &Polynomial<K> {
    type Output = Polynomial<K>;
    fn neg(self) -> Polynomial<K> {
        self.map_coeffs(|c| -c)
    }
}

impl<K: Block> Debug for Polynomial<K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl<K: Block> fmt::Display for Polynomial<K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let n = self.n;
        let first_name = |i: usize| format!("z{}{}", i / n + 1, i % n + 1);
        let second_name = |i: usize| {
            if K::SECOND_WEIGHT == 1 {
                format!("zb{}{}", i / n + 1, i % n + 1)
            } else {
                format!("w{}{}", i / 2 + 1, i % 2 + 1)
            }
        };
        for (idx, ((a, b), c)) in self.terms.iter().enumerate() {
            if idx > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{}", c)?;
            for (i, e) in a.iter().enumerate() {
                match e {
                    0 => {}
                    1 => write!(f, "*{}", first_name(i))?,
                    _ => write!(f, "*{}^{}", first_name(i), e)?,
                }
            }
            for (i, e) in b.iter().enumerate() {
                match e {
                    0 => {}
                    1 => write!(f, "*{}", second_name(i))?,
                    _ => write!(f, "*{}^{}", second_name(i), e)?,
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> GaussianRational {
        GaussianRational::from_ratio(n, d)
    }

    #[test]
    fn additive_inverse_and_sum() {
        let z = BiPolynomial::z(1, 1, 1);
        assert!((&z + &(-&z)).is_zero());
        let s = &z + &BiPolynomial::zbar(1, 1, 1);
        assert_eq!(s.len(), 2);
        let third = &z.scale(&q(1, 2)) + &z.scale(&q(1, 3));
        assert_eq!(third, z.scale(&q(5, 6)));
    }

    #[test]
    fn products() {
        let z11 = BiPolynomial::z(1, 1, 1);
        let z21 = BiPolynomial::z(1, 2, 1);
        let zb = BiPolynomial::zbar(1, 1, 1);
        let p = &z11 * &zb;
        assert_eq!(p.len(), 1);
        assert_eq!(p.bidegree(), Some((1, 1)));
        let s = &z11 + &z21;
        let sq = &s * &s;
        let expect = &(&(&z11 * &z11) + &(&z11 * &z21).scale(&q(2, 1))) + &(&z21 * &z21);
        assert_eq!(sq, expect);
        assert!((&BiPolynomial::zero(1) * &s).is_zero());
    }

    #[test]
    fn arity_mismatch_is_an_error() {
        let a = BiPolynomial::z(1, 1, 1);
        let b = BiPolynomial::z(2, 1, 1);
        assert!(matches!(a.try_add(&b), Err(AlgebraError::ArityMismatch { .. })));
        assert!(a.try_mul(&b).is_err());
    }

    #[test]
    fn conjugation() {
        let z = BiPolynomial::z(1, 1, 1);
        assert_eq!(z.conjugate(), BiPolynomial::zbar(1, 1, 1));
        let p = (&z * &BiPolynomial::zbar(1, 2, 1)).scale(&GaussianRational::i());
        let expect = (&BiPolynomial::zbar(1, 1, 1) * &BiPolynomial::z(1, 2, 1)).scale(&-GaussianRational::i());
        assert_eq!(p.conjugate(), expect);
    }

    #[test]
    fn bidegree_extraction() {
        let z = BiPolynomial::z(1, 1, 1);
        let zb = BiPolynomial::zbar(1, 1, 1);
        let p = &(&z * &zb) + &z.pow_truncated(3, 10);
        assert_eq!(p.bidegree_part(1, 1), &z * &zb);
        assert_eq!(p.bidegrees(), vec![(1, 1), (3, 0)]);
    }

    #[test]
    fn substitute_w_examples() {
        let n = 1;
        let mut phi = Matrix::from_fn(2, 2, |_, _| BiPolynomial::zero(n));
        for a in 0..2 {
            for b in 0..2 {
                *phi.get_mut(a, b) = &BiPolynomial::z(n, a + 1, 1) * &BiPolynomial::zbar(n, b + 1, 1);
            }
        }
        let w11 = TransformPolynomial::w(n, 1, 1);
        assert_eq!(w11.substitute_w(&phi, 10), phi.get(0, 0).clone());
        assert!(w11.substitute_w(&phi, 1).is_zero());
        let f = &TransformPolynomial::z(n, 1, 1) * &TransformPolynomial::w(n, 1, 2);
        let z11 = BiPolynomial::z(n, 1, 1);
        assert_eq!(f.substitute_w(&phi, 10), &z11 * phi.get(0, 1));
    }

    #[test]
    fn weighted_order() {
        let n = 1;
        assert_eq!(TransformPolynomial::z(n, 1, 1).weighted_order(), Some(1));
        assert_eq!(TransformPolynomial::w(n, 1, 1).weighted_order(), Some(2));
        let z = TransformPolynomial::z(n, 1, 1);
        let p = &(&(&z * &z) * &TransformPolynomial::w(n, 2, 2))
            + &(&TransformPolynomial::w(n, 1, 1) * &TransformPolynomial::w(n, 1, 2));
        assert_eq!(p.weighted_order(), Some(4));
        assert_eq!(TransformPolynomial::zero(n).weighted_order(), None);
    }

    #[test]
    fn differentiation() {
        let z = BiPolynomial::z(1, 1, 1);
        let sq = &z * &z;
        assert_eq!(sq.diff_first(0), z.scale(&q(2, 1)));
        let p = &z * &BiPolynomial::zbar(1, 1, 1);
        let one = p.diff_multi(&MultiIndex::unit(2, 0), &MultiIndex::unit(2, 0));
        assert_eq!(one, BiPolynomial::one(1));
    }

    fn naive_mul(a: &BiPolynomial, b: &BiPolynomial, max: u32) -> BiPolynomial {
        let mut out = BiPolynomial::zero(a.n());
        for ((a1, a2), ca) in a.terms() {
            for ((b1, b2), cb) in b.terms() {
                if a1.degree() + a2.degree() + b1.degree() + b2.degree() <= max {
                    out.add_term(a1.add(b1), a2.add(b2), ca * cb);
                }
            }
        }
        out
    }

    fn arb_poly(n: usize) -> impl proptest::strategy::Strategy<Value = BiPolynomial> {
        use proptest::prelude::*;
        let term = (proptest::collection::vec(0u32..3, 4 * n), -5i64..=5, -5i64..=5, 1i64..=6, any::<bool>());
        proptest::collection::vec(term, 0..12).prop_map(move |ts| {
            let mut p = BiPolynomial::zero(n);
            for (e, re, im, den, big) in ts {
                let mut c = GaussianRational::new(
                    num::rational::BigRational::new(re.into(), den.into()),
                    num::rational::BigRational::new(im.into(), (den + 1).into()),
                );
                if big {
                    // push the numerators past the i128 fast path
                    c = c.scale_int(&(num::BigInt::from(3) << 120));
                }
                p.add_term(MultiIndex::from_slice(&e[..2 * n]), MultiIndex::from_slice(&e[2 * n..]), c);
            }
            p
        })
    }

    proptest::proptest! {
        #[test]
        fn packed_product_matches_naive(a in arb_poly(1), b in arb_poly(1), max in 0u32..10) {
            proptest::prop_assert_eq!(a.mul_truncated(&b, max), naive_mul(&a, &b, max));
        }

        #[test]
        fn degree_window_product(a in arb_poly(1), b in arb_poly(1), lo in 0u32..6, w in 0u32..4) {
            let full = naive_mul(&a, &b, lo + w);
            let window = full.filter(|k| BiPolynomial::term_degree(k) >= lo);
            proptest::prop_assert_eq!(a.mul_range(&b, lo, lo + w), window);
        }

        #[test]
        fn shift_matches_general_composition(p in arb_poly(1), h in arb_poly(1), max in 2u32..8) {
            // order-≥1 shifts built from the random polynomial
            let hs: Vec<BiPolynomial> = (0..4)
                .map(|v| h.filter(|k| BiPolynomial::term_degree(k) >= 1 + (v as u32 % 2)))
                .collect();
            let (first, second) = hs.split_at(2);
            let id: Vec<BiPolynomial> = (0..4)
                .map(|v| if v < 2 { BiPolynomial::z(1, v + 1, 1) } else { BiPolynomial::zbar(1, v - 1, 1) })
                .collect();
            let full_first: Vec<BiPolynomial> = (0..2).map(|v| &id[v] + &first[v]).collect();
            let full_second: Vec<BiPolynomial> = (0..2).map(|v| &id[v + 2] + &second[v]).collect();
            proptest::prop_assert_eq!(
                p.compose_shift(first, second, max),
                p.compose(&full_first, &full_second, max)
            );
        }

        #[test]
        fn substitute_w_matches_general_composition(g in arb_poly(1), e in arb_poly(1), max in 0u32..9) {
            // reinterpret the second block of `g` as the four w variables
            let mut t = TransformPolynomial::zero(1);
            for ((a, b), c) in g.terms() {
                t.add_term(a.clone(), MultiIndex::from_slice(&[b.get(0), b.get(1), 0, 0]), c.clone());
            }
            let phi = Matrix::from_fn(2, 2, |a, b| e.filter(|k| BiPolynomial::term_degree(k) >= 1 + ((a + b) as u32 % 2)));
            let zs: Vec<BiPolynomial> = (1..=2).map(|a| BiPolynomial::z(1, a, 1)).collect();
            let ws: Vec<BiPolynomial> = (0..4).map(|i| phi.get(i / 2, i % 2).clone()).collect();
            proptest::prop_assert_eq!(t.substitute_w(&phi, max), t.compose(&zs, &ws, max));
        }
    }
}

//! Integer-numerator polynomials on packed exponents.
//!
//! Exponent vectors of up to 16 variables are packed 8 bits per variable
//! into a `u128`, so a monomial product is one integer addition. An
//! [`IntPoly`] keeps all coefficients over one denominator, which turns the
//! inner loops of products and sums into Gaussian-integer arithmetic (in
//! `i128` when a bit bound allows it). Conversion back to reduced
//! rationals happens once, at the end of a computation.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{Integer, One, ToPrimitive, Zero};
use rustc_hash::FxHashMap;

use super::{GaussianRational, MultiIndex};

pub(crate) const MAX_VARS: usize = 16;

pub(crate) fn pack(a: &MultiIndex, b: &MultiIndex) -> Option<u128> {
    let mut code = 0u128;
    for (i, e) in a.iter().chain(b.iter()).enumerate() {
        if i >= MAX_VARS || e > 255 {
            return None;
        }
        code |= (e as u128) << (8 * i);
    }
    Some(code)
}

pub(crate) fn unpack(code: u128, la: usize, lb: usize) -> (MultiIndex, MultiIndex) {
    let exp = |i: usize| ((code >> (8 * i)) & 0xff) as u32;
    let a: Vec<u32> = (0..la).map(exp).collect();
    let b: Vec<u32> = (la..la + lb).map(exp).collect();
    (MultiIndex::from_slice(&a), MultiIndex::from_slice(&b))
}

pub(crate) fn lane(code: u128, i: usize) -> u32 {
    ((code >> (8 * i)) & 0xff) as u32
}

/// `Σ_k (re_k + i·im_k)/den · x^{code_k}`; the first `la` lanes weigh 1,
/// the rest weigh `w2`.
#[derive(Clone, Debug)]
pub(crate) struct IntPoly {
    pub den: BigInt,
    pub terms: FxHashMap<u128, (BigInt, BigInt)>,
    pub la: usize,
    pub w2: u32,
}

impl IntPoly {
    pub fn zero(la: usize, w2: u32) -> Self {
        IntPoly { den: BigInt::one(), terms: FxHashMap::default(), la, w2 }
    }

    pub fn one(la: usize, w2: u32) -> Self {
        let mut p = Self::zero(la, w2);
        p.terms.insert(0, (BigInt::one(), BigInt::zero()));
        p
    }

    pub fn degree(&self, code: u128) -> u32 {
        let b = code.to_le_bytes();
        let first: u32 = b[..self.la].iter().map(|&x| x as u32).sum();
        let second: u32 = b[self.la..].iter().map(|&x| x as u32).sum();
        first + self.w2 * second
    }

    pub fn from_terms<'a>(la: usize, w2: u32, terms: impl Iterator<Item = (u128, &'a GaussianRational)> + Clone) -> Self {
        let mut den = BigInt::one();
        for (_, c) in terms.clone() {
            den = den.lcm(c.re().denom()).lcm(c.im().denom());
        }
        let num = |r: &BigRational| {
            if r.denom() == &den {
                r.numer().clone()
            } else {
                r.numer() * (&den / r.denom())
            }
        };
        let terms = terms.map(|(k, c)| (k, (num(c.re()), num(c.im())))).collect();
        IntPoly { den, terms, la, w2 }
    }

    pub fn to_terms(&self) -> impl Iterator<Item = (u128, GaussianRational)> + '_ {
        self.terms.iter().map(|(k, (re, im))| {
            let q = |x: &BigInt| BigRational::new(x.clone(), self.den.clone());
            (*k, GaussianRational::new(q(re), q(im)))
        })
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn sorted(&self, hi: u32) -> Vec<(u32, u128, &BigInt, &BigInt)> {
        let mut v: Vec<_> = self
            .terms
            .iter()
            .map(|(&k, (re, im))| (self.degree(k), k, re, im))
            .filter(|t| t.0 <= hi)
            .collect();
        v.sort_unstable_by_key(|t| (t.0, t.1));
        v
    }

    fn bits(v: &[(u32, u128, &BigInt, &BigInt)]) -> u64 {
        v.iter().map(|t| t.2.bits().max(t.3.bits())).max().unwrap_or(0)
    }

    /// Product keeping the degrees in `lo..=hi`.
    pub fn mul(&self, o: &Self, lo: u32, hi: u32) -> Self {
        let mut out = IntPoly { den: &self.den * &o.den, terms: FxHashMap::default(), la: self.la, w2: self.w2 };
        if self.is_zero() || o.is_zero() || lo > hi {
            out.den = BigInt::one();
            return out;
        }
        let l = self.sorted(hi);
        let r = o.sorted(hi);
        let pairs = l.len().min(r.len()).max(1) as u64;
        let bound = Self::bits(&l) + Self::bits(&r) + 2 + (64 - pairs.leading_zeros()) as u64;
        if bound < 126 {
            let small = |v: &[(u32, u128, &BigInt, &BigInt)]| -> Vec<(u32, u128, i128, i128)> {
                v.iter().map(|t| (t.0, t.1, t.2.to_i128().unwrap(), t.3.to_i128().unwrap())).collect()
            };
            let (l, r) = (small(&l), small(&r));
            let mut acc: FxHashMap<u128, (i128, i128)> = FxHashMap::default();
            for &(da, ka, ar, ai) in &l {
                let start = r.partition_point(|t| da + t.0 < lo);
                for &(db, kb, br, bi) in &r[start..] {
                    if da + db > hi {
                        break;
                    }
                    let e = acc.entry(ka + kb).or_insert((0, 0));
                    e.0 += ar * br - ai * bi;
                    e.1 += ar * bi + ai * br;
                }
            }
            out.terms = acc
                .into_iter()
                .filter(|(_, (re, im))| *re != 0 || *im != 0)
                .map(|(k, (re, im))| (k, (BigInt::from(re), BigInt::from(im))))
                .collect();
        } else {
            let mut acc: FxHashMap<u128, (BigInt, BigInt)> = FxHashMap::default();
            for &(da, ka, ar, ai) in &l {
                let start = r.partition_point(|t| da + t.0 < lo);
                for &(db, kb, br, bi) in &r[start..] {
                    if da + db > hi {
                        break;
                    }
                    let e = acc.entry(ka + kb).or_insert_with(|| (BigInt::zero(), BigInt::zero()));
                    e.0 += ar * br - ai * bi;
                    e.1 += ar * bi + ai * br;
                }
            }
            out.terms = acc.into_iter().filter(|(_, (re, im))| !(re.is_zero() && im.is_zero())).collect();
        }
        if out.den.bits() > 256 {
            out.reduce();
        }
        out
    }

    pub fn add_assign(&mut self, o: &Self) {
        if o.is_zero() {
            return;
        }
        if self.is_zero() {
            *self = o.clone();
            return;
        }
        if self.den != o.den {
            let l = self.den.lcm(&o.den);
            let f = &l / &self.den;
            if !f.is_one() {
                for (re, im) in self.terms.values_mut() {
                    *re *= &f;
                    *im *= &f;
                }
            }
            self.den = l;
        }
        let f = &self.den / &o.den;
        for (k, (re, im)) in &o.terms {
            let e = self.terms.entry(*k).or_insert_with(|| (BigInt::zero(), BigInt::zero()));
            if f.is_one() {
                e.0 += re;
                e.1 += im;
            } else {
                e.0 += re * &f;
                e.1 += im * &f;
            }
            if e.0.is_zero() && e.1.is_zero() {
                self.terms.remove(k);
            }
        }
    }

    /// Divides out the content shared by the denominator and all numerators.
    pub fn reduce(&mut self) {
        if self.terms.is_empty() {
            self.den = BigInt::one();
            return;
        }
        if self.den.is_one() {
            return;
        }
        let mut g = self.den.clone();
        for (re, im) in self.terms.values() {
            g = g.gcd(re).gcd(im);
            if g.is_one() {
                return;
            }
        }
        self.den /= &g;
        for (re, im) in self.terms.values_mut() {
            *re /= &g;
            *im /= &g;
        }
    }
}

impl IntPoly {
    /// `∂_v p / (k + 1)` restricted to degrees `≤ keep`, where `p = ∂^α q / α!`
    /// with `α_v = k`; the division is exact.
    pub fn taylor_step(&self, v: usize, k: u32, keep: u32) -> Self {
        let mut out = IntPoly { den: self.den.clone(), terms: FxHashMap::default(), la: self.la, w2: self.w2 };
        let unit = 1u128 << (8 * v);
        for (&code, (re, im)) in &self.terms {
            let e = lane(code, v);
            if e == 0 {
                continue;
            }
            let child = code - unit;
            if self.degree(child) > keep {
                continue;
            }
            let (e, d) = (BigInt::from(e), BigInt::from(k + 1));
            out.terms.insert(child, ((re * &e) / &d, (im * &e) / &d));
        }
        // no content reduction here: exactness of the next step relies on it
        out
    }
}

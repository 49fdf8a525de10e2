use std::fmt;

use num::bigint::BigInt;
use num::One;
use smallvec::SmallVec;

/// Exponent vector over one variable block.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct MultiIndex(SmallVec<[u8; 8]>);

impl MultiIndex {
    pub fn zeros(len: usize) -> Self {
        Self(SmallVec::from_elem(0, len))
    }

    pub fn from_slice(e: &[u32]) -> Self {
        Self(e.iter().map(|&x| u8::try_from(x).expect("exponent exceeds 255")).collect())
    }

    pub fn unit(len: usize, at: usize) -> Self {
        let mut m = Self::zeros(len);
        m.0[at] = 1;
        m
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> u32 {
        self.0[i] as u32
    }

    pub fn set(&mut self, i: usize, v: u32) {
        self.0[i] = u8::try_from(v).expect("exponent exceeds 255");
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.0.iter().map(|&x| x as u32)
    }

    pub fn to_vec(&self) -> Vec<u32> {
        self.iter().collect()
    }

    pub fn degree(&self) -> u32 {
        self.iter().sum()
    }

    pub fn add(&self, o: &Self) -> Self {
        debug_assert_eq!(self.len(), o.len());
        Self(self.0.iter().zip(&o.0).map(|(a, b)| a + b).collect())
    }

    /// `self - o` when `o ≤ self` componentwise.
    pub fn checked_sub(&self, o: &Self) -> Option<Self> {
        debug_assert_eq!(self.len(), o.len());
        let mut out = SmallVec::with_capacity(self.len());
        for (a, b) in self.0.iter().zip(&o.0) {
            out.push(a.checked_sub(*b)?);
        }
        Some(Self(out))
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0)
    }

    /// `α! = Π α_i!`.
    pub fn factorial(&self) -> BigInt {
        let mut acc = BigInt::one();
        for e in self.iter() {
            for k in 2..=e {
                acc *= k;
            }
        }
        acc
    }

    /// `Π α_i! / (α_i - β_i)!`, the constant produced by `∂^β z^α`.
    pub fn falling_factorial(&self, by: &Self) -> BigInt {
        let mut acc = BigInt::one();
        for (a, b) in self.iter().zip(by.iter()) {
            for k in (a - b + 1)..=a {
                acc *= k;
            }
        }
        acc
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.to_vec())
    }
}

/// All exponent vectors of length `len` with entry sum `total`, in
/// lexicographically decreasing order.
pub fn compositions(len: usize, total: u32) -> Vec<MultiIndex> {
    fn rec(len: usize, total: u32, cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
        if cur.len() + 1 == len {
            cur.push(total);
            out.push(MultiIndex::from_slice(cur));
            cur.pop();
            return;
        }
        for first in (0..=total).rev() {
            cur.push(first);
            rec(len, total - first, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if len == 0 {
        if total == 0 {
            out.push(MultiIndex::zeros(0));
        }
        return out;
    }
    rec(len, total, &mut Vec::with_capacity(len), &mut out);
    out
}

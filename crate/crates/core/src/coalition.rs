//! Feature coalitions as 64-bit masks.
//!
//! Features are indexed from zero. A coalition over `m` features may only set
//! the low `m` bits, which caps `m` at [`MAX_FEATURES`].

use std::fmt;

use crate::error::{Error, Result};

pub const MAX_FEATURES: usize = 63;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Coalition {
    bits: u64,
    m: u8,
}

impl Coalition {
    pub fn empty(m: usize) -> Self {
        assert!(m <= MAX_FEATURES, "at most {MAX_FEATURES} features");
        Self { bits: 0, m: m as u8 }
    }

    pub fn full(m: usize) -> Self {
        let mut c = Self::empty(m);
        c.bits = full_mask(m);
        c
    }

    /// Builds a coalition from a raw mask, rejecting bits at or above `m`.
    pub fn from_bits(bits: u64, m: usize) -> Result<Self> {
        if m > MAX_FEATURES {
            return Err(Error::Config(format!(
                "{m} features exceeds the {MAX_FEATURES}-feature cap"
            )));
        }
        if bits & !full_mask(m) != 0 {
            return Err(Error::Argument(format!(
                "mask {bits:#x} sets bits outside {m} features"
            )));
        }
        Ok(Self { bits, m: m as u8 })
    }

    pub(crate) fn from_bits_unchecked(bits: u64, m: usize) -> Self {
        debug_assert!(bits & !full_mask(m) == 0);
        Self { bits, m: m as u8 }
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(indices: I, m: usize) -> Result<Self> {
        let mut c = Self::empty(m);
        for i in indices {
            if i >= m {
                return Err(Error::Argument(format!("feature {i} out of range for M = {m}")));
            }
            c.bits |= 1 << i;
        }
        Ok(c)
    }

    #[inline]
    pub fn bits(self) -> u64 {
        self.bits
    }

    #[inline]
    pub fn num_features(self) -> usize {
        self.m as usize
    }

    #[inline]
    pub fn len(self) -> usize {
        self.bits.count_ones() as usize
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self.bits == 0
    }

    #[inline]
    pub fn contains(self, i: usize) -> bool {
        i < self.m as usize && self.bits >> i & 1 == 1
    }

    #[inline]
    pub fn with(self, i: usize) -> Self {
        debug_assert!(i < self.m as usize);
        Self { bits: self.bits | 1 << i, ..self }
    }

    #[inline]
    pub fn without(self, i: usize) -> Self {
        Self { bits: self.bits & !(1 << i), ..self }
    }

    #[inline]
    pub fn union(self, other: Self) -> Self {
        debug_assert_eq!(self.m, other.m);
        Self { bits: self.bits | other.bits, ..self }
    }

    #[inline]
    pub fn intersection(self, other: Self) -> Self {
        Self { bits: self.bits & other.bits, ..self }
    }

    #[inline]
    pub fn difference(self, other: Self) -> Self {
        Self { bits: self.bits & !other.bits, ..self }
    }

    /// `U \ self`.
    #[inline]
    pub fn complement(self) -> Self {
        Self { bits: !self.bits & full_mask(self.m as usize), ..self }
    }

    /// Member indices in increasing order.
    pub fn iter(self) -> Members {
        Members(self.bits)
    }

    /// Every subset of `self`, in increasing mask order, starting with the empty set.
    pub fn subsets(self) -> Subsets {
        Subsets { universe: self.bits, next: Some(0), m: self.m }
    }
}

#[inline]
pub(crate) fn full_mask(m: usize) -> u64 {
    if m == 64 {
        u64::MAX
    } else {
        (1u64 << m) - 1
    }
}

impl fmt::Debug for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

pub struct Members(u64);

impl Iterator for Members {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let i = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(i)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.0.count_ones() as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for Members {}

/// Subset walk over a fixed mask using the `(s - u) & u` successor trick,
/// which yields subsets in increasing numeric order.
pub struct Subsets {
    universe: u64,
    next: Option<u64>,
    m: u8,
}

impl Iterator for Subsets {
    type Item = Coalition;

    fn next(&mut self) -> Option<Coalition> {
        let cur = self.next?;
        self.next = if cur == self.universe {
            None
        } else {
            Some(cur.wrapping_sub(self.universe) & self.universe)
        };
        Some(Coalition { bits: cur, m: self.m })
    }
}

/// `C(n, k)` as an exact integer. Panics on overflow, which cannot happen for n <= 63.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for t in 0..k {
        acc = acc * (n - t) as u128 / (t + 1) as u128;
    }
    u64::try_from(acc).expect("binomial overflow")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subsets_enumerate_in_mask_order() {
        let s = Coalition::from_indices([1, 2], 6).unwrap();
        let got: Vec<Vec<usize>> = s.subsets().map(|c| c.iter().collect()).collect();
        assert_eq!(got, vec![vec![], vec![1], vec![2], vec![1, 2]]);
    }

    #[test]
    fn empty_universe_has_one_subset() {
        assert_eq!(Coalition::empty(4).subsets().count(), 1);
    }

    #[test]
    fn full_and_complement() {
        let u = Coalition::full(5);
        assert_eq!(u.len(), 5);
        assert_eq!(u.complement(), Coalition::empty(5));
        let s = Coalition::from_indices([0, 3], 5).unwrap();
        assert_eq!(s.complement().iter().collect::<Vec<_>>(), vec![1, 2, 4]);
    }

    #[test]
    fn rejects_bits_above_m() {
        assert!(Coalition::from_bits(0b1000, 3).is_err());
        assert!(Coalition::from_bits(0b111, 3).is_ok());
        assert!(Coalition::from_indices([3], 3).is_err());
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(6, 1), 6);
        assert_eq!(binomial(19, 9), 92378);
        assert_eq!(binomial(62, 31), 465428353255261088);
        assert_eq!(binomial(3, 4), 0);
    }

    #[test]
    fn max_features_full_mask() {
        let u = Coalition::full(MAX_FEATURES);
        assert_eq!(u.len(), 63);
        assert!(!u.contains(63));
    }
}

//! Fixed-capacity bitsets over item indices.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};

const WORD_BITS: usize = 64;

fn words_for(k: usize) -> usize {
    k.div_ceil(WORD_BITS)
}

/// A non-empty subset of the items `0..k`, stored as a bitset.
///
/// Clusters with different capacities never compare equal.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Cluster {
    k: usize,
    words: Box<[u64]>,
}

impl Cluster {
    /// Builds a cluster from member indices. Duplicates are ignored.
    pub fn from_indices<I>(k: usize, members: I) -> Result<Self>
    where
        I: IntoIterator<Item = usize>,
    {
        let mut words = vec![0u64; words_for(k)].into_boxed_slice();
        let mut any = false;
        for i in members {
            if i >= k {
                return Err(Error::IndexOutOfRange { index: i, k });
            }
            words[i / WORD_BITS] |= 1 << (i % WORD_BITS);
            any = true;
        }
        if !any {
            return Err(Error::EmptyCluster);
        }
        Ok(Cluster { k, words })
    }

    pub fn singleton(k: usize, i: usize) -> Self {
        assert!(i < k, "item {i} out of range for k = {k}");
        let mut words = vec![0u64; words_for(k)].into_boxed_slice();
        words[i / WORD_BITS] |= 1 << (i % WORD_BITS);
        Cluster { k, words }
    }

    /// The full item set `0..k`.
    pub fn full(k: usize) -> Self {
        assert!(k > 0, "the full set of zero items is empty");
        let mut words = vec![u64::MAX; words_for(k)].into_boxed_slice();
        let rem = k % WORD_BITS;
        if rem != 0 {
            *words.last_mut().unwrap() = (1u64 << rem) - 1;
        }
        Cluster { k, words }
    }

    /// Builds a cluster from the low `k` bits of a mask (`k <= 64`).
    pub(crate) fn from_mask(k: usize, mask: u64) -> Self {
        debug_assert!(k <= WORD_BITS && mask != 0);
        Cluster {
            k,
            words: vec![mask].into_boxed_slice(),
        }
    }

    pub fn capacity(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Always false; clusters are non-empty by construction.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_full(&self) -> bool {
        self.len() == self.k
    }

    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        i < self.k && self.words[i / WORD_BITS] & (1 << (i % WORD_BITS)) != 0
    }

    pub fn is_subset(&self, other: &Cluster) -> bool {
        self.k == other.k
            && self
                .words
                .iter()
                .zip(other.words.iter())
                .all(|(a, b)| a & !b == 0)
    }

    pub fn is_proper_subset(&self, other: &Cluster) -> bool {
        self.is_subset(other) && self != other
    }

    pub fn intersects(&self, other: &Cluster) -> bool {
        self.words
            .iter()
            .zip(other.words.iter())
            .any(|(a, b)| a & b != 0)
    }

    /// True when the two clusters share members but neither contains the other.
    pub fn properly_overlaps(&self, other: &Cluster) -> bool {
        self.intersects(other) && !self.is_subset(other) && !other.is_subset(self)
    }

    pub fn union(&self, other: &Cluster) -> Cluster {
        assert_eq!(self.k, other.k, "capacity mismatch");
        let words = self
            .words
            .iter()
            .zip(other.words.iter())
            .map(|(a, b)| a | b)
            .collect();
        Cluster { k: self.k, words }
    }

    /// Smallest member index.
    pub fn min_member(&self) -> usize {
        for (w, &word) in self.words.iter().enumerate() {
            if word != 0 {
                return w * WORD_BITS + word.trailing_zeros() as usize;
            }
        }
        unreachable!("clusters are non-empty")
    }

    /// Largest member index.
    pub fn max_member(&self) -> usize {
        for (w, &word) in self.words.iter().enumerate().rev() {
            if word != 0 {
                return w * WORD_BITS + (WORD_BITS - 1 - word.leading_zeros() as usize);
            }
        }
        unreachable!("clusters are non-empty")
    }

    /// Members in increasing order.
    pub fn iter(&self) -> Members<'_> {
        Members {
            words: &self.words,
            word_idx: 0,
            current: self.words.first().copied().unwrap_or(0),
            invert: false,
            k: self.k,
        }
    }

    /// Items of `0..k` outside the cluster, in increasing order.
    pub fn complement_iter(&self) -> Members<'_> {
        Members {
            words: &self.words,
            word_idx: 0,
            current: self.words.first().map(|w| !w).unwrap_or(0),
            invert: true,
            k: self.k,
        }
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }
}

/// Iterator over set (or unset) bits of a cluster.
pub struct Members<'a> {
    words: &'a [u64],
    word_idx: usize,
    current: u64,
    invert: bool,
    k: usize,
}

impl Iterator for Members<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        loop {
            if self.current != 0 {
                let bit = self.current.trailing_zeros() as usize;
                self.current &= self.current - 1;
                let i = self.word_idx * WORD_BITS + bit;
                return if i < self.k { Some(i) } else { None };
            }
            self.word_idx += 1;
            if self.word_idx >= self.words.len() {
                return None;
            }
            let w = self.words[self.word_idx];
            self.current = if self.invert { !w } else { w };
        }
    }
}

/// Canonical order: by smallest member, then larger clusters first.
///
/// Within a laminar family this puts every ancestor before its descendants
/// among clusters that share a smallest member.
impl Ord for Cluster {
    fn cmp(&self, other: &Self) -> Ordering {
        self.k
            .cmp(&other.k)
            .then_with(|| self.min_member().cmp(&other.min_member()))
            .then_with(|| other.len().cmp(&self.len()))
            .then_with(|| self.iter().cmp(other.iter()))
    }
}

impl PartialOrd for Cluster {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Cluster {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl fmt::Display for Cluster {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (n, i) in self.iter().enumerate() {
            if n > 0 {
                f.write_str(",")?;
            }
            write!(f, "{i}")?;
        }
        f.write_str("}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_and_complement() {
        for k in [1, 5, 63, 64, 65, 130] {
            let full = Cluster::full(k);
            assert_eq!(full.len(), k);
            assert!(full.is_full());
            assert_eq!(full.complement_iter().count(), 0);
            assert_eq!(full.iter().collect::<Vec<_>>(), (0..k).collect::<Vec<_>>());
        }
    }

    #[test]
    fn members_across_words() {
        let c = Cluster::from_indices(130, [0, 63, 64, 129]).unwrap();
        assert_eq!(c.to_vec(), vec![0, 63, 64, 129]);
        assert_eq!(c.min_member(), 0);
        assert_eq!(c.max_member(), 129);
        assert_eq!(c.complement_iter().count(), 126);
        assert!(!c.complement_iter().any(|i| c.contains(i)));
    }

    #[test]
    fn empty_and_out_of_range_rejected() {
        assert!(matches!(
            Cluster::from_indices(3, std::iter::empty()),
            Err(Error::EmptyCluster)
        ));
        assert!(matches!(
            Cluster::from_indices(3, [3]),
            Err(Error::IndexOutOfRange { index: 3, k: 3 })
        ));
    }

    #[test]
    fn overlap_relations() {
        let a = Cluster::from_indices(4, [0, 1]).unwrap();
        let b = Cluster::from_indices(4, [1, 2]).unwrap();
        let c = Cluster::from_indices(4, [0, 1, 2]).unwrap();
        assert!(a.properly_overlaps(&b));
        assert!(!a.properly_overlaps(&c));
        assert!(a.is_proper_subset(&c));
        assert!(!c.is_subset(&a));
        assert_eq!(a.union(&b), c);
    }

    #[test]
    fn canonical_order_puts_ancestors_first() {
        let mut v = [
            Cluster::singleton(4, 0),
            Cluster::from_indices(4, [0, 1]).unwrap(),
            Cluster::full(4),
            Cluster::singleton(4, 2),
        ];
        v.sort();
        assert_eq!(v[0], Cluster::full(4));
        assert_eq!(v[1], Cluster::from_indices(4, [0, 1]).unwrap());
        assert_eq!(v[2], Cluster::singleton(4, 0));
    }
}

//! Pair partitions of `{1..d}` and the permutation action on them.

use std::fmt;

use serde::{Serialize, Serializer};
use thiserror::Error;

/// A perfect matching of `{1..d}`, stored canonically: every pair is
/// `(small, large)` and pairs are sorted by their first element.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PairPartition {
    d: usize,
    pairs: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PartitionError {
    #[error("pair partitions need an even ground set, got d = {0}")]
    OddSize(usize),
    #[error("position {0} is outside 1..={1}")]
    OutOfRange(usize, usize),
    #[error("position {0} is covered more than once")]
    Repeated(usize),
    #[error("expected {expected} pairs, got {got}")]
    WrongCount { expected: usize, got: usize },
}

impl PairPartition {
    pub fn new(d: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, PartitionError> {
        if !d.is_multiple_of(2) {
            return Err(PartitionError::OddSize(d));
        }
        let mut seen = vec![false; d + 1];
        let mut out = Vec::with_capacity(d / 2);
        for (a, b) in pairs {
            for x in [a, b] {
                if x == 0 || x > d {
                    return Err(PartitionError::OutOfRange(x, d));
                }
                if seen[x] {
                    return Err(PartitionError::Repeated(x));
                }
                seen[x] = true;
            }
            out.push((a.min(b), a.max(b)));
        }
        if out.len() != d / 2 {
            return Err(PartitionError::WrongCount { expected: d / 2, got: out.len() });
        }
        out.sort_unstable();
        Ok(PairPartition { d, pairs: out })
    }

    /// `{1,d}, {2,d-1}, ..., {d/2, d/2+1}`.
    pub fn rainbow(d: usize) -> Result<Self, PartitionError> {
        PairPartition::new(d, (1..=d / 2).map(|k| (k, d + 1 - k)))
    }

    pub fn size(&self) -> usize {
        self.d
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Partner of position `x`.
    pub fn partner(&self, x: usize) -> Option<usize> {
        self.pairs.iter().find_map(|&(a, b)| {
            if a == x {
                Some(b)
            } else if b == x {
                Some(a)
            } else {
                None
            }
        })
    }

    /// Image `{{σ(a), σ(b)}}` under a 1-indexed permutation (`sigma[x-1] = σ(x)`).
    pub fn permuted(&self, sigma: &[usize]) -> PairPartition {
        assert_eq!(sigma.len(), self.d);
        let pairs = self.pairs.iter().map(|&(a, b)| (sigma[a - 1], sigma[b - 1]));
        PairPartition::new(self.d, pairs).expect("permutation image of a pair partition")
    }

    /// All `(d-1)!!` pair partitions of `{1..d}`.
    pub fn all(d: usize) -> Result<Vec<PairPartition>, PartitionError> {
        if !d.is_multiple_of(2) {
            return Err(PartitionError::OddSize(d));
        }
        let mut out = Vec::new();
        let mut current = Vec::with_capacity(d / 2);
        let mut free: Vec<usize> = (1..=d).collect();
        enumerate_matchings(&mut free, &mut current, &mut |pairs| {
            out.push(PairPartition::new(d, pairs.iter().copied()).unwrap());
        });
        Ok(out)
    }
}

fn enumerate_matchings(
    free: &mut Vec<usize>,
    current: &mut Vec<(usize, usize)>,
    emit: &mut impl FnMut(&[(usize, usize)]),
) {
    if free.is_empty() {
        emit(current);
        return;
    }
    let first = free.remove(0);
    for k in 0..free.len() {
        let partner = free.remove(k);
        current.push((first, partner));
        enumerate_matchings(free, current, emit);
        current.pop();
        free.insert(k, partner);
    }
    free.insert(0, first);
}

impl fmt::Display for PairPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, (a, b)) in self.pairs.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{{{a},{b}}}")?;
        }
        f.write_str("}")
    }
}

impl Serialize for PairPartition {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.pairs.iter().map(|&(a, b)| [a, b]).collect::<Vec<_>>().serialize(s)
    }
}

/// Inverse of a 1-indexed permutation.
pub fn invert_permutation(sigma: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; sigma.len()];
    for (k, &s) in sigma.iter().enumerate() {
        inv[s - 1] = k + 1;
    }
    inv
}

/// Whether `sigma` is a bijection of `{1..len}`.
pub fn is_permutation(sigma: &[usize]) -> bool {
    let mut seen = vec![false; sigma.len()];
    sigma.iter().all(|&s| {
        if s == 0 || s > sigma.len() || seen[s - 1] {
            return false;
        }
        seen[s - 1] = true;
        true
    })
}

/// Permutation from 1-indexed disjoint cycles, e.g. `[[1, 3, 2, 6, 5]]` on `d = 6`.
pub fn from_cycles(d: usize, cycles: &[&[usize]]) -> Vec<usize> {
    let mut sigma: Vec<usize> = (1..=d).collect();
    for cycle in cycles {
        for (k, &x) in cycle.iter().enumerate() {
            sigma[x - 1] = cycle[(k + 1) % cycle.len()];
        }
    }
    sigma
}

/// Every permutation of `{1..d}` in lexicographic order.
pub fn all_permutations(d: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = (1..=d).collect();
    loop {
        out.push(current.clone());
        // next lexicographic permutation
        let Some(i) = (1..d).rev().find(|&i| current[i - 1] < current[i]) else {
            break;
        };
        let j = (i..d).rev().find(|&j| current[j] > current[i - 1]).unwrap();
        current.swap(i - 1, j);
        current[i..].reverse();
    }
    out
}

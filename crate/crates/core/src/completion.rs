//! Completing partially known neutral words.
//!
//! [`WordSkeleton::complete`] recovers the negative letters of a neutral word
//! from its positive letters and its pair partition. [`TauCompletion`]
//! recovers them from the letter permutation `tau` when the known indices are
//! widely separated.

use thiserror::Error;

use crate::partition::{invert_permutation, is_permutation, PairPartition};
use crate::rewrite::{is_palindromic_normal, normalize, pair_partition, partition_from_trace};
use crate::word::{Exponent, Index, Letter, Word};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SkeletonError {
    #[error("skeleton length {0} is odd")]
    OddLength(usize),
    #[error("partition covers {partition} positions but the skeleton has {len}")]
    SizeMismatch { len: usize, partition: usize },
    #[error("pair {{{0},{1}}} does not join a positive and a negative position")]
    UnbalancedPair(usize, usize),
    #[error("position {0}: indices must be given exactly on positive positions")]
    KnownMismatch(usize),
    #[error("p must be at least 2, got {0}")]
    BadParameter(u32),
}

/// Exponents, the indices of positive letters, and the cancellation pairing
/// of a neutral word whose negative indices are unknown.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordSkeleton {
    p: u32,
    exponents: Vec<Exponent>,
    known: Vec<Option<Index>>,
    partition: PairPartition,
}

impl WordSkeleton {
    pub fn new(
        p: u32,
        exponents: Vec<Exponent>,
        known: Vec<Option<Index>>,
        partition: PairPartition,
    ) -> Result<Self, SkeletonError> {
        let d = exponents.len();
        if p < 2 {
            return Err(SkeletonError::BadParameter(p));
        }
        if !d.is_multiple_of(2) {
            return Err(SkeletonError::OddLength(d));
        }
        if partition.size() != d || known.len() != d {
            return Err(SkeletonError::SizeMismatch { len: d, partition: partition.size() });
        }
        for &(a, b) in partition.pairs() {
            if exponents[a - 1] == exponents[b - 1] {
                return Err(SkeletonError::UnbalancedPair(a, b));
            }
        }
        for (k, (e, i)) in exponents.iter().zip(&known).enumerate() {
            if e.is_pos() != i.is_some() {
                return Err(SkeletonError::KnownMismatch(k + 1));
            }
        }
        Ok(WordSkeleton { p, exponents, known, partition })
    }

    /// Skeleton of a neutral word: its negative indices are forgotten.
    pub fn of_word(w: &Word) -> Result<Self, crate::rewrite::RewriteError> {
        let partition = pair_partition(w)?;
        let exponents = w.letters().iter().map(|l| l.exponent).collect();
        let known = w.letters().iter().map(|l| l.is_pos().then_some(l.index)).collect();
        Ok(WordSkeleton::new(w.p(), exponents, known, partition).expect("neutral words give valid skeletons"))
    }

    pub fn partition(&self) -> &PairPartition {
        &self.partition
    }

    /// The unique neutral word matching the skeleton, or `None` when the
    /// forced indices are negative or the result does not realise the
    /// requested pairing.
    ///
    /// The letters of minimal known index `i0` and their partners are pushed
    /// to the ends of the word; every other letter is raised by `p - 1` per
    /// crossing, the core is completed recursively, and the shifts undone.
    pub fn complete(&self) -> Option<Word> {
        let slots: Vec<Slot> = (0..self.exponents.len())
            .map(|k| Slot {
                positive: self.exponents[k].is_pos(),
                value: self.known[k].map(|i| i as i128),
                partner: self.partition.partner(k + 1).unwrap() - 1,
            })
            .collect();
        let solved = solve(&slots, i128::from(self.p - 1))?;
        let letters = solved
            .iter()
            .zip(&self.exponents)
            .map(|(&v, &exponent)| Some(Letter { index: Index::try_from(v).ok()?, exponent }))
            .collect::<Option<Vec<_>>>()?;
        let w = Word::from_parts(self.p, letters);
        let trace = normalize(&w);
        (is_palindromic_normal(&trace.normal) && partition_from_trace(&trace) == self.partition).then_some(w)
    }
}

#[derive(Clone)]
struct Slot {
    positive: bool,
    value: Option<i128>,
    partner: usize,
}

/// Values for every slot; negative results are allowed here and rejected by
/// the caller.
fn solve(slots: &[Slot], shift: i128) -> Option<Vec<i128>> {
    if slots.is_empty() {
        return Some(Vec::new());
    }
    let i0 = slots.iter().filter_map(|s| s.value).min()?;
    let mut out = vec![0i128; slots.len()];
    let mut peeled = vec![false; slots.len()];
    for (k, s) in slots.iter().enumerate() {
        if s.positive && s.value == Some(i0) {
            peeled[k] = true;
            peeled[s.partner] = true;
            out[k] = i0;
            out[s.partner] = i0;
        }
    }
    // shift of each remaining letter: positive i0 letters to its right and
    // negative i0 letters to its left cross it
    let mut shifts = vec![0i128; slots.len()];
    let mut neg_left = 0i128;
    for k in 0..slots.len() {
        if peeled[k] && !slots[k].positive {
            neg_left += 1;
        }
        shifts[k] = neg_left;
    }
    let mut pos_right = 0i128;
    for k in (0..slots.len()).rev() {
        if peeled[k] && slots[k].positive {
            pos_right += 1;
        }
        shifts[k] = (shifts[k] + pos_right) * shift;
    }

    let rest: Vec<usize> = (0..slots.len()).filter(|&k| !peeled[k]).collect();
    let mut renumber = vec![usize::MAX; slots.len()];
    for (new, &old) in rest.iter().enumerate() {
        renumber[old] = new;
    }
    let core: Vec<Slot> = rest
        .iter()
        .map(|&k| Slot {
            positive: slots[k].positive,
            value: slots[k].value.map(|v| v + shifts[k]),
            partner: renumber[slots[k].partner],
        })
        .collect();
    let solved = solve(&core, shift)?;
    for (new, &old) in rest.iter().enumerate() {
        out[old] = solved[new] - shifts[old];
    }
    Some(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TauCompletionError {
    #[error("malformed input: {0}")]
    Malformed(&'static str),
    #[error("gap condition fails between slots {0} and {1}")]
    PreconditionViolated(usize, usize),
    #[error("completion needs a negative index")]
    NegativeIndex,
    #[error("symbolic completion did not re-verify")]
    VerificationFailed,
}

/// Input of the completion from a letter permutation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TauCompletion {
    pub p: u32,
    /// 1-based: `tau[x - 1]` is the normal-form slot of input letter `x`.
    pub tau: Vec<usize>,
    /// `half[l - 1]` is the index of the letter landing in slot `l <= d/2`.
    pub half: Vec<Index>,
}

impl TauCompletion {
    /// Exponent of every input position, forced by `tau`.
    pub fn exponents(&self) -> Vec<Exponent> {
        let d = self.tau.len();
        self.tau.iter().map(|&slot| if slot <= d / 2 { Exponent::Pos } else { Exponent::Neg }).collect()
    }

    fn validate(&self) -> Result<(), TauCompletionError> {
        let d = self.tau.len();
        if self.p < 2 {
            return Err(TauCompletionError::Malformed("p must be at least 2"));
        }
        if !d.is_multiple_of(2) {
            return Err(TauCompletionError::Malformed("length must be even"));
        }
        if !is_permutation(&self.tau) {
            return Err(TauCompletionError::Malformed("tau is not a permutation"));
        }
        if self.half.len() != d / 2 {
            return Err(TauCompletionError::Malformed("need one known index per positive slot"));
        }
        Ok(())
    }

    /// Checks `half[l] + (4p-4)d < half[l-1]` for every consecutive pair.
    pub fn check_gap(&self) -> Result<(), TauCompletionError> {
        let d = self.tau.len() as u128;
        let gap = (4 * u128::from(self.p) - 4) * d;
        for l in 1..self.half.len() {
            if u128::from(self.half[l]) + gap >= u128::from(self.half[l - 1]) {
                return Err(TauCompletionError::PreconditionViolated(l, l + 1));
            }
        }
        Ok(())
    }

    /// The unique neutral word with this permutation; requires the gap
    /// condition.
    pub fn solve(&self) -> Result<Word, TauCompletionError> {
        self.validate()?;
        self.check_gap()?;
        self.solve_unchecked()
    }

    /// Same procedure without the gap check. The result is still verified,
    /// so inputs outside the gap regime either succeed or report
    /// `VerificationFailed`.
    pub fn solve_unchecked(&self) -> Result<Word, TauCompletionError> {
        self.validate()?;
        let d = self.tau.len();
        let half_d = d / 2;
        let shift = i128::from(self.p - 1);

        // Pair `k` is the positive letter landing in slot k and the negative
        // letter landing in slot d-k+1. Offsets track index drift.
        let mut tokens: Vec<Token> = self
            .tau
            .iter()
            .map(|&slot| {
                if slot <= half_d {
                    Token { pair: slot, positive: true, offset: 0 }
                } else {
                    Token { pair: d + 1 - slot, positive: false, offset: 0 }
                }
            })
            .collect();
        let mut origin: Vec<usize> = (0..d).collect();

        // Comparisons follow from the gap regime: a larger pair label means a
        // smaller index.
        let f_rule = |a: Token, b: Token| -> Option<(Token, Token)> {
            if a.positive || !b.positive {
                return None;
            }
            Some(match a.pair.cmp(&b.pair) {
                std::cmp::Ordering::Greater => (Token { offset: b.offset + shift, ..b }, a),
                std::cmp::Ordering::Less => (b, Token { offset: a.offset + shift, ..a }),
                std::cmp::Ordering::Equal => (b, a),
            })
        };
        let h_rule = |a: Token, b: Token| -> Option<(Token, Token)> {
            match (a.positive, b.positive) {
                (true, true) if a.pair > b.pair => Some((Token { offset: b.offset - shift, ..b }, a)),
                (false, false) if a.pair < b.pair => Some((b, Token { offset: a.offset - shift, ..a })),
                _ => None,
            }
        };
        for rule in [&f_rule as &dyn Fn(Token, Token) -> Option<(Token, Token)>, &h_rule] {
            while let Some(k) = (0..d.saturating_sub(1)).find(|&k| rule(tokens[k], tokens[k + 1]).is_some()) {
                let (a, b) = rule(tokens[k], tokens[k + 1]).unwrap();
                tokens[k] = a;
                tokens[k + 1] = b;
                origin.swap(k, k + 1);
            }
        }

        let expected_shape = tokens.iter().enumerate().all(|(slot, t)| {
            if slot < half_d {
                t.positive && t.pair == slot + 1
            } else {
                !t.positive && t.pair == d - slot
            }
        });
        if !expected_shape {
            return Err(TauCompletionError::VerificationFailed);
        }

        // slot l holds j(l) = half[l] + q_l; the mirror slot holds u_l + r_l
        // and must carry the same index
        let mut indices = vec![0i128; d];
        for l in 1..=half_d {
            let q = tokens[l - 1].offset;
            let r = tokens[d - l].offset;
            let known = i128::from(self.half[l - 1]);
            indices[origin[l - 1]] = known;
            indices[origin[d - l]] = known + q - r;
        }
        let letters = indices
            .iter()
            .zip(self.exponents())
            .map(|(&i, exponent)| Index::try_from(i).map(|index| Letter { index, exponent }))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| TauCompletionError::NegativeIndex)?;
        let w = Word::from_parts(self.p, letters);

        let trace = normalize(&w);
        if is_palindromic_normal(&trace.normal) && trace.tau == self.tau {
            Ok(w)
        } else {
            Err(TauCompletionError::VerificationFailed)
        }
    }

    /// Positions (1-based) of the letters with unknown index.
    pub fn unknown_positions(&self) -> Vec<usize> {
        let inv = invert_permutation(&self.tau);
        let d = self.tau.len();
        (d / 2 + 1..=d).map(|slot| inv[slot - 1]).collect()
    }
}

#[derive(Debug, Clone, Copy)]
struct Token {
    pair: usize,
    positive: bool,
    offset: i128,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::from_cycles;
    use crate::rewrite::is_neutral;

    fn skeleton(p: u32, known_pos: [(usize, Index); 3], partition: [(usize, usize); 3]) -> WordSkeleton {
        let mut exponents = vec![Exponent::Neg; 6];
        let mut known = vec![None; 6];
        for (pos, i) in known_pos {
            exponents[pos - 1] = Exponent::Pos;
            known[pos - 1] = Some(i);
        }
        WordSkeleton::new(p, exponents, known, PairPartition::new(6, partition).unwrap()).unwrap()
    }

    #[test]
    fn completes_from_positive_letters() {
        for p in [2u32, 3, 5, 7] {
            let s = skeleton(p, [(4, 3), (5, 0), (6, 1)], [(3, 5), (2, 6), (1, 4)]);
            let w = s.complete().expect("unique completion");
            let expected =
                Word::from_signed(p, &[(2 * p as u64 + 1, -1), (1, -1), (0, -1), (3, 1), (0, 1), (1, 1)]).unwrap();
            assert_eq!(w, expected, "p = {p}");
        }
    }

    #[test]
    fn impossible_pairing_has_no_completion() {
        for p in [3u32, 4, 5] {
            let s = skeleton(p, [(4, 3), (5, 0), (6, 1)], [(1, 5), (2, 4), (3, 6)]);
            assert_eq!(s.complete(), None, "p = {p}");
        }
    }

    #[test]
    fn two_letter_skeleton() {
        let partition = PairPartition::new(2, [(1, 2)]).unwrap();
        let s =
            WordSkeleton::new(4, vec![Exponent::Pos, Exponent::Neg], vec![Some(7), None], partition.clone()).unwrap();
        assert_eq!(s.complete().unwrap().to_string(), "x7 x7^-1");
        let s = WordSkeleton::new(4, vec![Exponent::Neg, Exponent::Pos], vec![None, Some(7)], partition).unwrap();
        assert_eq!(s.complete().unwrap().to_string(), "x7^-1 x7");
    }

    #[test]
    fn skeleton_validation() {
        let partition = PairPartition::new(2, [(1, 2)]).unwrap();
        assert_eq!(
            WordSkeleton::new(2, vec![Exponent::Pos, Exponent::Pos], vec![Some(1), Some(1)], partition.clone()),
            Err(SkeletonError::UnbalancedPair(1, 2))
        );
        assert_eq!(
            WordSkeleton::new(2, vec![Exponent::Pos, Exponent::Neg], vec![Some(1), Some(1)], partition),
            Err(SkeletonError::KnownMismatch(2))
        );
    }

    #[test]
    fn tau_completion_trivial_length_two() {
        for p in 2..6 {
            let c = TauCompletion { p, tau: vec![1, 2], half: vec![9] };
            assert_eq!(c.solve().unwrap().to_string(), "x9 x9^-1");
        }
    }

    #[test]
    fn tau_completion_identity_length_four() {
        let c = TauCompletion { p: 2, tau: vec![1, 2, 3, 4], half: vec![100, 20] };
        let w = c.solve().unwrap();
        // brute force: exactly one completion with indices <= 200
        let mut hits = Vec::new();
        for a in 0..=200u64 {
            for b in 0..=200u64 {
                let cand = Word::from_signed(2, &[(100, 1), (20, 1), (a, -1), (b, -1)]).unwrap();
                if is_neutral(&cand) && normalize(&cand).tau == vec![1, 2, 3, 4] {
                    hits.push(cand);
                }
            }
        }
        assert_eq!(hits, vec![w]);
    }

    #[test]
    fn tau_completion_gap_precondition() {
        let c = TauCompletion { p: 2, tau: vec![1, 2, 3, 4], half: vec![100, 84] };
        assert_eq!(c.solve(), Err(TauCompletionError::PreconditionViolated(1, 2)));
        let c = TauCompletion { p: 2, tau: vec![1, 2, 3, 4], half: vec![100, 83] };
        assert!(c.solve().is_ok());
        let c = TauCompletion { p: 2, tau: vec![1, 1, 3, 4], half: vec![100, 50] };
        assert!(matches!(c.solve(), Err(TauCompletionError::Malformed(_))));
    }

    #[test]
    fn tau_completion_brown_instance_outside_gap_regime() {
        let c = TauCompletion { p: 5, tau: from_cycles(6, &[&[1, 3, 2, 6, 5]]), half: vec![100, 50, 1] };
        assert!(matches!(c.solve(), Err(TauCompletionError::PreconditionViolated(..))));
        let w = c.solve_unchecked().unwrap();
        assert_eq!(w.to_string(), "x1 x100^-1 x50 x1^-1 x100 x46^-1");
        assert_eq!(c.unknown_positions(), vec![4, 6, 2]);
    }
}

//! The rewriting calculus on words of `F_p`.
//!
//! Normal forms come from the composite system: rule `f` (negative letter
//! followed by a positive one) is run to a fixpoint, then rule `h` sorts the
//! positive and negative parts. Every rewrite swaps two adjacent letters, so
//! letters keep an origin tag and the permutation `tau` is read off at the end.

use serde::Serialize;
use thiserror::Error;

use crate::partition::{invert_permutation, PairPartition};
use crate::word::{Exponent, Index, Letter, Word};

/// Rule `f`: rewrites `(x_a^-1, x_b)` so that the positive letter comes first.
pub fn step_f(left: Letter, right: Letter, p: u32) -> Option<(Letter, Letter)> {
    if left.is_pos() || !right.is_pos() {
        return None;
    }
    let shift = Index::from(p - 1);
    let (a, b) = (left.index, right.index);
    Some(match a.cmp(&b) {
        std::cmp::Ordering::Greater => (Letter::pos(b), Letter::neg(a + shift)),
        std::cmp::Ordering::Less => (Letter::pos(b + shift), Letter::neg(a)),
        std::cmp::Ordering::Equal => (Letter::pos(b), Letter::neg(a)),
    })
}

/// Rule `h`: reorders two positive (or two negative) letters whose indices
/// are too far apart for the normal form.
pub fn step_h(left: Letter, right: Letter, p: u32) -> Option<(Letter, Letter)> {
    let shift = Index::from(p - 1);
    match (left.exponent, right.exponent) {
        (Exponent::Pos, Exponent::Pos) if right.index > left.index + shift => {
            Some((Letter::pos(right.index - shift), Letter::pos(left.index)))
        }
        (Exponent::Neg, Exponent::Neg) if left.index > right.index + shift => {
            Some((Letter::neg(right.index), Letter::neg(left.index - shift)))
        }
        _ => None,
    }
}

/// Normal form of a word together with the letter permutation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizationTrace {
    pub normal: Word,
    /// `tau[l - 1]` is the 1-based slot of the `l`-th input letter in `normal`.
    pub tau: Vec<usize>,
    pub steps: usize,
}

impl NormalizationTrace {
    pub fn tau_inverse(&self) -> Vec<usize> {
        invert_permutation(&self.tau)
    }

    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Repr<'a> {
            normal: String,
            tau: &'a [usize],
            steps: usize,
        }
        serde_json::to_value(Repr { normal: self.normal.to_string(), tau: &self.tau, steps: self.steps })
            .expect("trace serializes")
    }
}

#[derive(Clone, Copy)]
struct Tagged {
    letter: Letter,
    origin: usize,
}

/// Picks which redex to rewrite among the applicable positions (sorted
/// ascending, never empty). Returning an out-of-range index panics.
pub trait RedexChooser {
    fn choose(&mut self, candidates: &[usize]) -> usize;
}

/// Always rewrites the leftmost redex.
pub struct Leftmost;

impl RedexChooser for Leftmost {
    fn choose(&mut self, _: &[usize]) -> usize {
        0
    }
}

impl<F: FnMut(&[usize]) -> usize> RedexChooser for F {
    fn choose(&mut self, candidates: &[usize]) -> usize {
        self(candidates)
    }
}

/// Normal form with the leftmost-redex strategy.
pub fn normalize(w: &Word) -> NormalizationTrace {
    normalize_with(w, &mut Leftmost)
}

/// Normal form where `chooser` selects the redex at each step. The `f` phase
/// always runs to its fixpoint before the `h` phase starts.
pub fn normalize_with(w: &Word, chooser: &mut impl RedexChooser) -> NormalizationTrace {
    let p = w.p();
    let mut cells: Vec<Tagged> =
        w.letters().iter().enumerate().map(|(origin, &letter)| Tagged { letter, origin }).collect();
    let mut steps = 0;
    steps += run_phase(&mut cells, chooser, |a, b| step_f(a, b, p));
    steps += run_phase(&mut cells, chooser, |a, b| step_h(a, b, p));

    let mut tau = vec![0; cells.len()];
    for (slot, cell) in cells.iter().enumerate() {
        tau[cell.origin] = slot + 1;
    }
    let normal = Word::from_parts(p, cells.into_iter().map(|c| c.letter).collect());
    NormalizationTrace { normal, tau, steps }
}

fn run_phase(
    cells: &mut [Tagged],
    chooser: &mut impl RedexChooser,
    rule: impl Fn(Letter, Letter) -> Option<(Letter, Letter)>,
) -> usize {
    let mut steps = 0;
    let mut candidates = Vec::new();
    loop {
        candidates.clear();
        candidates.extend(
            (0..cells.len().saturating_sub(1)).filter(|&k| rule(cells[k].letter, cells[k + 1].letter).is_some()),
        );
        if candidates.is_empty() {
            return steps;
        }
        let k = candidates[chooser.choose(&candidates)];
        let (a, b) = rule(cells[k].letter, cells[k + 1].letter).unwrap();
        let (left_origin, right_origin) = (cells[k].origin, cells[k + 1].origin);
        // the two letters trade places
        cells[k] = Tagged { letter: a, origin: right_origin };
        cells[k + 1] = Tagged { letter: b, origin: left_origin };
        steps += 1;
    }
}

/// Whether `w` has the shape of a normal form: positives before negatives,
/// positive part with `j(l) + p - 1 >= j(l+1)`, negative part with
/// `j(l) <= j(l+1) + p - 1`.
pub fn is_normal_form(w: &Word) -> bool {
    let letters = w.letters();
    let split = letters.iter().take_while(|l| l.is_pos()).count();
    if letters[split..].iter().any(|l| l.is_pos()) {
        return false;
    }
    let p = w.p();
    letters.windows(2).all(|pair| step_f(pair[0], pair[1], p).is_none() && step_h(pair[0], pair[1], p).is_none())
}

/// Palindromic normal form: `x_{j1} .. x_{jk} x_{jk}^-1 .. x_{j1}^-1`.
pub fn is_palindromic_normal(normal: &Word) -> bool {
    let letters = normal.letters();
    let d = letters.len();
    if !d.is_multiple_of(2) {
        return false;
    }
    (0..d / 2).all(|l| {
        let (front, back) = (letters[l], letters[d - 1 - l]);
        front.is_pos() && !back.is_pos() && front.index == back.index
    })
}

/// Whether the word evaluates to the identity, decided by the palindromic
/// shape of its normal form.
pub fn is_neutral(w: &Word) -> bool {
    w.len().is_multiple_of(2) && is_palindromic_normal(&normalize(w).normal)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RewriteError {
    #[error("word `{0}` does not evaluate to the identity")]
    NotNeutral(String),
    #[error("empty word has no minimal index")]
    EmptyWord,
}

/// Original positions of letters that cancel each other: the pairs
/// `{tau^-1(k), tau^-1(d-k+1)}` for `k <= d/2`.
pub fn pair_partition(w: &Word) -> Result<PairPartition, RewriteError> {
    let trace = normalize(w);
    if !is_palindromic_normal(&trace.normal) {
        return Err(RewriteError::NotNeutral(w.to_string()));
    }
    Ok(partition_from_trace(&trace))
}

pub(crate) fn partition_from_trace(trace: &NormalizationTrace) -> PairPartition {
    let inv = trace.tau_inverse();
    let d = inv.len();
    PairPartition::new(d, (1..=d / 2).map(|k| (inv[k - 1], inv[d - k]))).expect("mirror slots form a matching")
}

/// Result of pushing every letter of minimal index `i0` outwards:
/// `w  ->  x_{i0}^r . core . x_{i0}^{-r'}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Peeled {
    pub leading: usize,
    pub trailing: usize,
    pub min_index: Index,
    pub core: Word,
    /// For each core letter, its position (1-based) in the input word.
    pub core_origins: Vec<usize>,
}

/// Pushes positive `x_{i0}` letters to the left end and `x_{i0}^-1` to the
/// right end. Crossing a letter of larger index raises that index by `p - 1`.
pub fn peel_min_index(w: &Word) -> Result<Peeled, RewriteError> {
    let i0 = w.min_index().ok_or(RewriteError::EmptyWord)?;
    let p = w.p();
    let shift = Index::from(p - 1);
    let mut cells: Vec<Tagged> =
        w.letters().iter().enumerate().map(|(origin, &letter)| Tagged { letter, origin }).collect();
    let rule = |a: Letter, b: Letter| -> Option<(Letter, Letter)> {
        if b == Letter::pos(i0) && a.index > i0 {
            return Some((b, Letter { index: a.index + shift, ..a }));
        }
        if a == Letter::neg(i0) && b.index > i0 {
            return Some((Letter { index: b.index + shift, ..b }, a));
        }
        if a == Letter::neg(i0) && b == Letter::pos(i0) {
            return Some((b, a));
        }
        None
    };
    run_phase(&mut cells, &mut Leftmost, rule);

    let leading = cells.iter().take_while(|c| c.letter == Letter::pos(i0)).count();
    let trailing = cells.iter().rev().take_while(|c| c.letter == Letter::neg(i0)).count();
    let middle = &cells[leading..cells.len() - trailing];
    debug_assert!(middle.iter().all(|c| c.letter.index != i0));
    Ok(Peeled {
        leading,
        trailing,
        min_index: i0,
        core: Word::from_parts(p, middle.iter().map(|c| c.letter).collect()),
        core_origins: middle.iter().map(|c| c.origin + 1).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::from_cycles;

    fn w(p: u32, pairs: &[(Index, i32)]) -> Word {
        Word::from_signed(p, pairs).unwrap()
    }

    #[test]
    fn rule_f_cases() {
        assert_eq!(step_f(Letter::neg(2), Letter::pos(0), 2), Some((Letter::pos(0), Letter::neg(3))));
        assert_eq!(step_f(Letter::neg(0), Letter::pos(1), 2), Some((Letter::pos(2), Letter::neg(0))));
        assert_eq!(step_f(Letter::neg(5), Letter::pos(5), 3), Some((Letter::pos(5), Letter::neg(5))));
        assert_eq!(step_f(Letter::pos(5), Letter::neg(5), 3), None);
        assert_eq!(step_f(Letter::pos(1), Letter::pos(5), 3), None);
    }

    #[test]
    fn rule_h_cases() {
        assert_eq!(step_h(Letter::pos(0), Letter::pos(2), 2), Some((Letter::pos(1), Letter::pos(0))));
        assert_eq!(step_h(Letter::pos(0), Letter::pos(1), 2), None);
        assert_eq!(step_h(Letter::neg(104), Letter::neg(1), 5), Some((Letter::neg(1), Letter::neg(100))));
        assert_eq!(step_h(Letter::neg(5), Letter::neg(1), 5), None);
        assert_eq!(step_h(Letter::pos(0), Letter::neg(9), 2), None);
    }

    #[test]
    fn normalize_small_thompson_word() {
        // f-phase gives x0 x2 x2^-1 x0^-1, which is not yet h-irreducible
        let t = normalize(&w(2, &[(1, -1), (0, 1), (2, 1), (0, -1)]));
        assert_eq!(t.normal, w(2, &[(1, 1), (0, 1), (0, -1), (1, -1)]));
        assert_eq!(t.tau, vec![4, 2, 1, 3]);
        assert_eq!(t.steps, 4);
        assert!(is_normal_form(&t.normal));
    }

    #[test]
    fn normalize_brown_example() {
        let input = w(5, &[(1, 1), (100, -1), (50, 1), (1, -1), (100, 1), (46, -1)]);
        let t = normalize(&input);
        assert_eq!(t.normal.to_string(), "x96 x46 x1 x1^-1 x46^-1 x96^-1");
        assert_eq!(t.tau, from_cycles(6, &[&[1, 3, 2, 6, 5]]));
        assert!(is_neutral(&input));
    }

    #[test]
    fn normal_words_are_fixed_points() {
        for p in 2..6 {
            let input = w(p, &[(7, 1), (5, 1), (0, 1), (3, -1), (9, -1)]);
            assert!(is_normal_form(&input));
            let t = normalize(&input);
            assert_eq!(t.normal, input);
            assert_eq!(t.tau, vec![1, 2, 3, 4, 5]);
            assert_eq!(t.steps, 0);
        }
    }

    #[test]
    fn neutrality_examples() {
        assert!(is_neutral(&w(2, &[(0, 1), (1, 1), (1, -1), (0, -1)])));
        assert!(!is_neutral(&w(2, &[(0, 1), (1, -1)])));
        assert!(is_neutral(&Word::empty(4).unwrap()));
    }

    #[test]
    fn partitions() {
        let pp = pair_partition(&w(2, &[(1, -1), (0, 1), (2, 1), (0, -1)])).unwrap();
        assert_eq!(pp, PairPartition::new(4, [(2, 4), (1, 3)]).unwrap());
        let pp = pair_partition(&w(7, &[(5, 1), (5, -1)])).unwrap();
        assert_eq!(pp.pairs(), &[(1, 2)]);
        for p in [2, 3, 5] {
            let i1 = 2 * p as u64 + 1;
            let ex1 = w(p, &[(i1, -1), (1, -1), (0, -1), (3, 1), (0, 1), (1, 1)]);
            let pp = pair_partition(&ex1).unwrap();
            assert_eq!(pp, PairPartition::new(6, [(3, 5), (2, 6), (1, 4)]).unwrap(), "p = {p}");
        }
        assert!(matches!(pair_partition(&w(2, &[(0, 1), (1, -1)])), Err(RewriteError::NotNeutral(_))));
    }

    #[test]
    fn peel_pushes_minimal_letters_out() {
        for p in [2u32, 3, 5] {
            let s = u64::from(p - 1);
            let (i1, i2) = (4, 9);
            let peeled = peel_min_index(&w(p, &[(i1, -1), (i2, -1), (0, -1), (3, 1), (0, 1), (1, 1)])).unwrap();
            assert_eq!((peeled.leading, peeled.trailing, peeled.min_index), (1, 1, 0));
            assert_eq!(peeled.core, w(p, &[(i1 + s, -1), (i2 + s, -1), (2 * p as u64 + 1, 1), (p as u64, 1)]));
            assert_eq!(peeled.core_origins, vec![1, 2, 4, 6]);
        }
        let peeled = peel_min_index(&w(2, &[(0, 1), (1, 1)])).unwrap();
        assert_eq!((peeled.leading, peeled.trailing, peeled.min_index), (1, 0, 0));
        assert_eq!(peeled.core, w(2, &[(1, 1)]));
        let peeled = peel_min_index(&w(4, &[(2, -1), (2, 1)])).unwrap();
        assert_eq!((peeled.leading, peeled.trailing, peeled.min_index), (1, 1, 2));
        assert!(peeled.core.is_empty());
        assert_eq!(peel_min_index(&Word::empty(2).unwrap()), Err(RewriteError::EmptyWord));
    }

    #[test]
    fn trace_json_shape() {
        let t = normalize(&w(2, &[(1, -1), (1, 1)]));
        let v = t.to_json();
        assert_eq!(v["normal"], "x1 x1^-1");
        assert_eq!(v["tau"], serde_json::json!([2, 1]));
        assert_eq!(v["steps"], 1);
    }
}

//! Counting neutral words and the moments of `s_n = sum_i (x_i + x_i^-1) / sqrt(2n)`.
//!
//! Words of length `d` over `x_0^±1, ..., x_{n-1}^±1` are enumerated either
//! exhaustively (`Brute`), by joining two halves on their evaluated diagrams
//! (`Mitm`), or by folding letter by letter over a map from group elements to
//! multiplicities (`Dp`). All engines shard their work over rayon and combine
//! partial counts by integer addition, so results never depend on the number
//! of worker threads.
//!
//! The trace state `gamma` counts words evaluating to the identity; the state
//! `theta` (on `F = F_2` only) counts words whose value lies in the oriented
//! subgroup.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::hash::Hash;
use std::io;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Serialize, Serializer};
use serde_json::json;
use thiserror::Error;

use crate::diagram::{DiagramKey, TreeDiagram};
use crate::oriented::{ternary_theta, theta};
use crate::partition::{all_permutations, PairPartition};
use crate::rewrite::{is_neutral, is_palindromic_normal, normalize};
use crate::word::{Exponent, Index, Letter, Word};

/// Default work budget: enumerated words, half-words, or multiplications.
pub const DEFAULT_BUDGET: u64 = 200_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum State {
    Gamma,
    Theta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Brute,
    Mitm,
    Dp,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MomentError {
    #[error("needs {needed} work units, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u64 },
    #[error("theta moments are defined on F_2 only, got p = {0}")]
    ThetaRequiresP2(u32),
    #[error("p must be at least 2, got {0}")]
    BadParameter(u32),
    #[error("n must be at least 1")]
    EmptyAlphabet,
    #[error("d must be even, got {0}")]
    OddLength(usize),
    #[error("unknown {kind} '{value}'")]
    UnknownName { kind: &'static str, value: String },
    #[error("worker pool: {0}")]
    Pool(String),
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            State::Gamma => "gamma",
            State::Theta => "theta",
        })
    }
}

impl FromStr for State {
    type Err = MomentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gamma" => Ok(State::Gamma),
            "theta" => Ok(State::Theta),
            _ => Err(MomentError::UnknownName { kind: "state", value: s.to_owned() }),
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Engine::Brute => "brute",
            Engine::Mitm => "mitm",
            Engine::Dp => "dp",
        })
    }
}

impl FromStr for Engine {
    type Err = MomentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "brute" => Ok(Engine::Brute),
            "mitm" => Ok(Engine::Mitm),
            "dp" => Ok(Engine::Dp),
            _ => Err(MomentError::UnknownName { kind: "engine", value: s.to_owned() }),
        }
    }
}

// ---------------------------------------------------------------------------
// enumeration plumbing

fn check_p(p: u32) -> Result<(), MomentError> {
    if p < 2 {
        return Err(MomentError::BadParameter(p));
    }
    Ok(())
}

fn check_n(n: u64) -> Result<(), MomentError> {
    if n == 0 {
        return Err(MomentError::EmptyAlphabet);
    }
    Ok(())
}

fn charge(needed: u128, budget: u64) -> Result<(), MomentError> {
    if needed > u128::from(budget) {
        return Err(MomentError::BudgetExceeded { needed, budget });
    }
    Ok(())
}

/// `(2n)^len`, saturating.
fn word_count(n: u64, len: usize) -> u128 {
    let k = 2 * u128::from(n);
    u32::try_from(len).ok().and_then(|e| k.checked_pow(e)).unwrap_or(u128::MAX)
}

/// Letter number `code` of the alphabet `x_0, x_0^-1, x_1, x_1^-1, ...`.
fn letter(code: usize) -> Letter {
    let exponent = if code.is_multiple_of(2) { Exponent::Pos } else { Exponent::Neg };
    Letter { index: (code / 2) as Index, exponent }
}

fn decode_word(mut code: u64, len: usize, n: u64) -> Vec<Letter> {
    let k = 2 * n;
    let mut out = vec![letter(0); len];
    for slot in out.iter_mut().rev() {
        *slot = letter((code % k) as usize);
        code /= k;
    }
    out
}

/// Folds `visit` over every word of length `len` (in letter codes order
/// within a shard), sharding by a prefix long enough to keep every worker
/// busy. `merge` must be commutative for the result to be deterministic.
fn par_fold_words<A, I, F, M>(len: usize, n: u64, identity: I, visit: F, merge: M) -> A
where
    A: Send,
    I: Fn() -> A + Sync + Send,
    F: Fn(A, &[Letter]) -> A + Sync + Send,
    M: Fn(A, A) -> A + Sync + Send,
{
    let k = (2 * n) as usize;
    let mut prefix_len = 0;
    while prefix_len < len && k.pow(prefix_len as u32) < 256 {
        prefix_len += 1;
    }
    let shards = k.pow(prefix_len as u32) as u64;
    let rest = len - prefix_len;
    (0..shards)
        .into_par_iter()
        .fold(&identity, |mut acc, shard| {
            let mut buf = decode_word(shard, prefix_len, n);
            buf.resize(len, letter(0));
            let mut digits = vec![0usize; rest];
            loop {
                for (slot, &c) in buf[prefix_len..].iter_mut().zip(&digits) {
                    *slot = letter(c);
                }
                acc = visit(acc, &buf);
                // odometer over the suffix
                let mut pos = rest;
                loop {
                    if pos == 0 {
                        return acc;
                    }
                    pos -= 1;
                    digits[pos] += 1;
                    if digits[pos] < k {
                        break;
                    }
                    digits[pos] = 0;
                }
            }
        })
        .reduce(&identity, &merge)
}

fn add_maps<K: Hash + Eq>(mut a: HashMap<K, u64>, mut b: HashMap<K, u64>) -> HashMap<K, u64> {
    if a.len() < b.len() {
        std::mem::swap(&mut a, &mut b);
    }
    for (key, c) in b {
        *a.entry(key).or_default() += c;
    }
    a
}

/// Letters of the `p`-ary alphabet for `n` generators, as diagrams.
fn generator_diagrams(n: u64, p: u32, index_of: impl Fn(Index) -> Index) -> Vec<TreeDiagram> {
    (0..2 * n as usize)
        .map(|code| {
            let l = letter(code);
            let g = TreeDiagram::generator(index_of(l.index), p);
            if l.is_pos() {
                g
            } else {
                g.inverse()
            }
        })
        .collect()
}

/// Value of a word over the alphabet `gens` (letter codes as in [`letter`]).
fn eval_letters(gens: &[TreeDiagram], letters: &[Letter], p: u32) -> TreeDiagram {
    let code = |l: &Letter| 2 * l.index as usize + usize::from(!l.is_pos());
    match letters.split_first() {
        None => TreeDiagram::identity(p),
        Some((first, rest)) => rest.iter().fold(gens[code(first)].clone(), |acc, l| acc.multiply(&gens[code(l)])),
    }
}

/// Multiplicities of the group elements reached by all words of length
/// `len`, computed one letter at a time.
fn element_layers(
    len: usize,
    start: TreeDiagram,
    gens: &[TreeDiagram],
    budget: u64,
) -> Result<HashMap<TreeDiagram, u64>, MomentError> {
    let mut layer = HashMap::from([(start, 1u64)]);
    let mut spent = 0u128;
    for _ in 0..len {
        spent += layer.len() as u128 * gens.len() as u128;
        charge(spent, budget)?;
        layer = layer
            .par_iter()
            .fold(HashMap::new, |mut m, (g, &c)| {
                for h in gens {
                    *m.entry(g.multiply(h)).or_default() += c;
                }
                m
            })
            .reduce(HashMap::new, add_maps);
    }
    Ok(layer)
}

// ---------------------------------------------------------------------------
// neutral words

/// `|W_0(d, n)|` by testing every word for a palindromic normal form.
pub fn count_neutral_brute(d: usize, n: u64, p: u32, budget: u64) -> Result<u64, MomentError> {
    check_p(p)?;
    check_n(n)?;
    if d % 2 == 1 {
        // a neutral word has exponent sum zero
        return Ok(0);
    }
    charge(word_count(n, d), budget)?;
    Ok(par_fold_words(
        d,
        n,
        || 0u64,
        |acc, letters| acc + u64::from(is_neutral(&Word::from_parts(p, letters.to_vec()))),
        |a, b| a + b,
    ))
}

/// Per half: reduced-diagram key of each half-word's value, and of its
/// inverse.
fn half_maps(len: usize, n: u64, p: u32) -> (HashMap<DiagramKey, u64>, HashMap<DiagramKey, u64>) {
    let gens = generator_diagrams(n, p, |i| i);
    par_fold_words(
        len,
        n,
        || (HashMap::new(), HashMap::new()),
        |(mut fwd, mut inv), letters| {
            let g = eval_letters(&gens, letters, p);
            *fwd.entry(g.key()).or_default() += 1;
            *inv.entry(g.inverse_key()).or_default() += 1;
            (fwd, inv)
        },
        |(a1, b1), (a2, b2)| (add_maps(a1, a2), add_maps(b1, b2)),
    )
}

/// `|W_0(d, n)|` as `sum_g L_1(g) L_2(g^-1)` over the values of the two
/// halves of the word.
pub fn count_neutral_mitm(d: usize, n: u64, p: u32, budget: u64) -> Result<u64, MomentError> {
    check_p(p)?;
    check_n(n)?;
    if d % 2 == 1 {
        return Ok(0);
    }
    let (d1, d2) = (d / 2, d - d / 2);
    charge(word_count(n, d1).saturating_add(word_count(n, d2)), budget)?;
    let (left, _) = half_maps(d1, n, p);
    let (_, right_inv) = half_maps(d2, n, p);
    Ok(left.iter().map(|(key, c)| c * right_inv.get(key).copied().unwrap_or(0)).sum())
}

/// `|W_0(d, n)|` as the multiplicity of the identity after folding. The
/// last letter is not multiplied out: a value `g` of length `d - 1` is
/// completed exactly when `g^-1` is a single letter.
pub fn count_neutral_dp(d: usize, n: u64, p: u32, budget: u64) -> Result<u64, MomentError> {
    check_p(p)?;
    check_n(n)?;
    if d == 0 {
        return Ok(1);
    }
    let gens = generator_diagrams(n, p, |i| i);
    let layer = element_layers(d - 1, TreeDiagram::identity(p), &gens, budget)?;
    let letters: HashSet<DiagramKey> = gens.iter().map(TreeDiagram::key).collect();
    Ok(layer.par_iter().filter(|(g, _)| letters.contains(&g.inverse_key())).map(|(_, &c)| c).sum())
}

pub fn count_neutral(d: usize, n: u64, p: u32, engine: Engine, budget: u64) -> Result<u64, MomentError> {
    match engine {
        Engine::Brute => count_neutral_brute(d, n, p, budget),
        Engine::Mitm => count_neutral_mitm(d, n, p, budget),
        Engine::Dp => count_neutral_dp(d, n, p, budget),
    }
}

/// `count / (2n)^(d/2)`; `None` for odd `d` with a nonzero count, where the
/// value is irrational.
pub fn normalized_value(count: u64, n: u64, d: usize) -> Option<BigRational> {
    if count == 0 {
        return Some(BigRational::zero());
    }
    if d % 2 == 1 {
        return None;
    }
    let den = BigInt::from(2 * n).pow(d as u32 / 2);
    Some(BigRational::new(BigInt::from(count), den))
}

/// `gamma(s_n^d)` exactly.
pub fn gamma_moment(d: usize, n: u64, p: u32, engine: Engine, budget: u64) -> Result<BigRational, MomentError> {
    let count = count_neutral(d, n, p, engine, budget)?;
    Ok(normalized_value(count, n, d).expect("odd-length words are never neutral"))
}

// ---------------------------------------------------------------------------
// theta

fn iota_generators(n: u64) -> Vec<TreeDiagram> {
    generator_diagrams(n, 3, |i| 2 * i)
}

/// `c_n^d`: the number of words of length `d` over `y_0^±1 .. y_{n-1}^±1`
/// whose value lies in the oriented subgroup.
pub fn theta_moment_unnormalized(d: usize, n: u64, engine: Engine, budget: u64) -> Result<u64, MomentError> {
    check_n(n)?;
    match engine {
        Engine::Brute => {
            charge(word_count(n, d), budget)?;
            Ok(par_fold_words(
                d,
                n,
                || 0u64,
                |acc, letters| {
                    let w = Word::from_parts(2, letters.to_vec());
                    acc + u64::from(theta(&w).expect("words over F_2"))
                },
                |a, b| a + b,
            ))
        }
        Engine::Dp => {
            let layer = element_layers(d, TreeDiagram::identity(3), &iota_generators(n), budget)?;
            Ok(layer.par_iter().map(|(g, &c)| c * u64::from(ternary_theta(g).expect("ternary"))).sum())
        }
        Engine::Mitm => {
            let (d1, d2) = (d / 2, d - d / 2);
            let gens = iota_generators(n);
            let half = |len: usize| -> Result<Vec<(TreeDiagram, u64)>, MomentError> {
                let layer = element_layers(len, TreeDiagram::identity(3), &gens, budget)?;
                let mut entries: Vec<_> = layer.into_iter().collect();
                entries.sort_unstable();
                Ok(entries)
            };
            let left = half(d1)?;
            let right = half(d2)?;
            charge(left.len() as u128 * right.len() as u128, budget)?;
            Ok(left
                .par_iter()
                .map(|(g, c1)| {
                    right
                        .iter()
                        .map(|(h, c2)| c1 * c2 * u64::from(ternary_theta(&g.multiply(h)).expect("ternary")))
                        .sum::<u64>()
                })
                .sum())
        }
    }
}

/// `theta(s_n^d) = c_n^d / (2n)^(d/2)`.
pub fn theta_moment(d: usize, n: u64, engine: Engine, budget: u64) -> Result<Option<BigRational>, MomentError> {
    Ok(normalized_value(theta_moment_unnormalized(d, n, engine, budget)?, n, d))
}

// ---------------------------------------------------------------------------
// tau histograms and bounds

/// `N(d, n, tau)` for every permutation `tau` realised by a neutral word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TauHistogram {
    pub d: usize,
    pub n: u64,
    pub p: u32,
    pub counts: BTreeMap<Vec<usize>, u64>,
}

impl TauHistogram {
    pub fn count(&self, tau: &[usize]) -> u64 {
        self.counts.get(tau).copied().unwrap_or(0)
    }

    /// `sum_tau N(d, n, tau)`, which is `|W_0(d, n)|`.
    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let entries: Vec<_> = self.counts.iter().map(|(tau, c)| json!({"tau": tau, "N": c})).collect();
        json!({"d": self.d, "n": self.n, "p": self.p, "total": self.total(), "histogram": entries})
    }
}

fn add_btree(mut a: BTreeMap<Vec<usize>, u64>, b: BTreeMap<Vec<usize>, u64>) -> BTreeMap<Vec<usize>, u64> {
    for (k, c) in b {
        *a.entry(k).or_default() += c;
    }
    a
}

/// Buckets every neutral word of length `d` by its permutation `tau`.
///
/// `Brute` normalizes every word; `Mitm` pairs half-words with inverse
/// values and normalizes only the neutral concatenations. `Dp` keeps no
/// words and falls back to `Mitm`.
pub fn tau_histogram(d: usize, n: u64, p: u32, engine: Engine, budget: u64) -> Result<TauHistogram, MomentError> {
    check_p(p)?;
    check_n(n)?;
    let mut hist = TauHistogram { d, n, p, counts: BTreeMap::new() };
    if d % 2 == 1 {
        return Ok(hist);
    }
    hist.counts = match engine {
        Engine::Brute => {
            charge(word_count(n, d), budget)?;
            par_fold_words(
                d,
                n,
                BTreeMap::new,
                |mut acc, letters| {
                    let trace = normalize(&Word::from_parts(p, letters.to_vec()));
                    if is_palindromic_normal(&trace.normal) {
                        *acc.entry(trace.tau).or_default() += 1;
                    }
                    acc
                },
                add_btree,
            )
        }
        Engine::Mitm | Engine::Dp => {
            let half = d / 2;
            charge(word_count(n, half).saturating_mul(2), budget)?;
            let gens = generator_diagrams(n, p, |i| i);
            // word codes grouped by the key of their value (resp. inverse)
            let grouped = |invert: bool| -> HashMap<DiagramKey, Vec<u64>> {
                let total = word_count(n, half) as u64;
                (0..total)
                    .into_par_iter()
                    .fold(HashMap::new, |mut m: HashMap<DiagramKey, Vec<u64>>, code| {
                        let g = eval_letters(&gens, &decode_word(code, half, n), p);
                        let key = if invert { g.inverse_key() } else { g.key() };
                        m.entry(key).or_default().push(code);
                        m
                    })
                    .reduce(HashMap::new, |mut a, b| {
                        for (k, mut v) in b {
                            a.entry(k).or_default().append(&mut v);
                        }
                        a
                    })
            };
            let left = grouped(false);
            let right = grouped(true);
            let pairs: Vec<(&Vec<u64>, &Vec<u64>)> =
                left.iter().filter_map(|(k, l)| right.get(k).map(|r| (l, r))).collect();
            pairs
                .par_iter()
                .fold(BTreeMap::new, |mut acc, (l, r)| {
                    for &a in l.iter() {
                        for &b in r.iter() {
                            let mut letters = decode_word(a, half, n);
                            letters.extend(decode_word(b, half, n));
                            let trace = normalize(&Word::from_parts(p, letters));
                            debug_assert!(is_palindromic_normal(&trace.normal));
                            *acc.entry(trace.tau).or_default() += 1;
                        }
                    }
                    acc
                })
                .reduce(BTreeMap::new, add_btree)
        }
    };
    Ok(hist)
}

/// `C(a, b)`, with `C(a, b) = 0` when `a < b` (including negative `a`).
pub fn binomial(a: i64, b: u64) -> BigUint {
    if a < 0 || (a as u64) < b {
        return BigUint::zero();
    }
    let a = a as u64;
    let mut acc = BigUint::from(1u32);
    for k in 0..b {
        acc = acc * BigUint::from(a - k) / BigUint::from(k + 1);
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Holds,
    Fails,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundVerdicts {
    pub lower: Verdict,
    pub upper_printed: Verdict,
    pub upper_corrected: Verdict,
}

fn big_or_string<S: Serializer>(v: &Option<BigUint>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        None => s.serialize_none(),
        Some(b) => match b.to_u64() {
            Some(x) => s.serialize_u64(x),
            None => s.serialize_str(&b.to_string()),
        },
    }
}

/// The three binomial bounds for one permutation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundRecord {
    pub d: usize,
    pub n: u64,
    pub p: u32,
    pub tau: Vec<usize>,
    #[serde(rename = "N")]
    pub count: u64,
    /// `C(n - d(p-1) - d(4p-4) - d^2/2 (4p-4), d/2)`; `None` below the
    /// threshold on `n`.
    #[serde(serialize_with = "big_or_string")]
    pub lower: Option<BigUint>,
    /// `C(n - d(d+1)(p-1), d/2)` as printed; `None` when `a < d/2`.
    #[serde(serialize_with = "big_or_string")]
    pub upper_printed: Option<BigUint>,
    /// `C(n + d(d+1)(p-1), d/2)`, the range of the injection in the proof.
    #[serde(serialize_with = "big_or_string")]
    pub upper_corrected: Option<BigUint>,
    pub verdicts: BoundVerdicts,
    /// Floating point, for reading only: `N / n^(d/2)`, whose limit is
    /// `1/(d/2)!`.
    pub trend_float: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub records: Vec<BoundRecord>,
    /// Failures of the printed upper bound.
    pub errata: Vec<String>,
    /// Cells excluded from a check and why.
    pub notes: Vec<String>,
}

impl BoundReport {
    pub fn all_hold(&self, pick: impl Fn(&BoundVerdicts) -> Verdict) -> bool {
        self.records.iter().all(|r| pick(&r.verdicts) != Verdict::Fails)
    }
}

/// Lower threshold: the lower bound applies for `n` strictly above it.
pub fn lower_bound_threshold(d: usize, p: u32) -> u64 {
    let (d, q) = (d as u64, u64::from(p) - 1);
    d * q + d * 4 * q + d * d / 2 * 4 * q + d / 2
}

/// Checks every `tau` in `S_d` (zero-count permutations included) against
/// the lower, printed upper and corrected upper bounds.
pub fn bound_report(hist: &TauHistogram, budget: u64) -> Result<BoundReport, MomentError> {
    let TauHistogram { d, n, p, .. } = *hist;
    if d % 2 == 1 {
        return Err(MomentError::OddLength(d));
    }
    charge((1..=d as u128).product(), budget)?;
    let half = d as u64 / 2;
    let (di, ni, q) = (d as i64, n as i64, i64::from(p) - 1);
    let lower_arg = ni - di * q - di * 4 * q - di * di / 2 * 4 * q;
    let lower_applies = n > lower_bound_threshold(d, p);
    let printed_arg = ni - di * (di + 1) * q;
    let corrected_arg = ni + di * (di + 1) * q;
    let check = |bound: &Option<BigUint>, holds: bool| match bound {
        None => Verdict::Skipped,
        Some(_) if holds => Verdict::Holds,
        Some(_) => Verdict::Fails,
    };
    let binom_if = |applies: bool, a: i64| applies.then(|| binomial(a, half));

    let mut report = BoundReport { records: Vec::new(), errata: Vec::new(), notes: Vec::new() };
    if !lower_applies {
        report.notes.push(format!(
            "lower bound skipped: n = {n} does not exceed the threshold {}",
            lower_bound_threshold(d, p)
        ));
    }
    if printed_arg < half as i64 {
        report.notes.push(format!("printed upper bound skipped: C({printed_arg}, {half}) is degenerate"));
    }
    for tau in all_permutations(d) {
        let count = hist.count(&tau);
        let big = BigUint::from(count);
        let lower = binom_if(lower_applies, lower_arg);
        let upper_printed = binom_if(printed_arg >= half as i64, printed_arg);
        let upper_corrected = binom_if(corrected_arg >= half as i64, corrected_arg);
        let verdicts = BoundVerdicts {
            lower: check(&lower, lower.as_ref().is_some_and(|b| *b <= big)),
            upper_printed: check(&upper_printed, upper_printed.as_ref().is_some_and(|b| big <= *b)),
            upper_corrected: check(&upper_corrected, upper_corrected.as_ref().is_some_and(|b| big <= *b)),
        };
        if verdicts.upper_printed == Verdict::Fails {
            report.errata.push(format!(
                "printed upper bound fails: d={d} n={n} p={p} tau={tau:?} N={count} > C({printed_arg}, {half}) = {}",
                upper_printed.as_ref().unwrap()
            ));
        }
        let trend_float = count as f64 / (n as f64).powi(half as i32);
        report.records.push(BoundRecord {
            d,
            n,
            p,
            tau,
            count,
            lower,
            upper_printed,
            upper_corrected,
            verdicts,
            trend_float,
        });
    }
    Ok(report)
}

/// For every pair partition `pi` of `[d]`, the number of `tau` in `S_d`
/// with `tau(pi)` the rainbow partition.
pub fn rainbow_count(d: usize, budget: u64) -> Result<BTreeMap<PairPartition, u64>, MomentError> {
    if d % 2 == 1 {
        return Err(MomentError::OddLength(d));
    }
    let factorial: u128 = (1..=d as u128).product();
    if d > 8 {
        return Err(MomentError::BudgetExceeded { needed: factorial, budget: budget.min(40_320) });
    }
    charge(factorial, budget)?;
    let rainbow = PairPartition::rainbow(d).expect("even d");
    let perms = all_permutations(d);
    let partitions = PairPartition::all(d).expect("even d");
    Ok(partitions
        .into_par_iter()
        .map(|pi| {
            let hits = perms.iter().filter(|tau| pi.permuted(tau) == rainbow).count() as u64;
            (pi, hits)
        })
        .collect())
}

// ---------------------------------------------------------------------------
// tables

/// A batch of moments over a range of `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MomentRequest {
    pub p: u32,
    pub d: usize,
    pub n_values: Vec<u64>,
    pub state: State,
    pub engine: Engine,
    pub budget: u64,
    /// Worker threads; `None` uses the ambient rayon pool.
    pub workers: Option<usize>,
}

impl MomentRequest {
    pub fn validate(&self) -> Result<(), MomentError> {
        check_p(self.p)?;
        if self.state == State::Theta && self.p != 2 {
            return Err(MomentError::ThetaRequiresP2(self.p));
        }
        if self.n_values.contains(&0) {
            return Err(MomentError::EmptyAlphabet);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MomentRow {
    pub state: State,
    pub p: u32,
    pub d: usize,
    pub n: u64,
    /// `|W_0(d, n)|` for `gamma`, `c_n^d` for `theta`.
    pub count: Result<u64, MomentError>,
}

impl MomentRow {
    /// `gamma(s_n^d)` or `theta(s_n^d)`.
    pub fn value(&self) -> Option<BigRational> {
        self.count.as_ref().ok().and_then(|&c| normalized_value(c, self.n, self.d))
    }

    fn status(&self) -> String {
        match &self.count {
            Ok(_) => "ok".to_owned(),
            Err(e) => e.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MomentTable {
    pub rows: Vec<MomentRow>,
}

pub const CSV_HEADER: [&str; 8] =
    ["state", "p", "d", "n", "count", "normalized_value_num", "normalized_value_den", "status"];

impl MomentTable {
    pub fn has_errors(&self) -> bool {
        self.rows.iter().any(|r| r.count.is_err())
    }

    pub fn budget_exceeded(&self) -> bool {
        self.rows.iter().any(|r| matches!(r.count, Err(MomentError::BudgetExceeded { .. })))
    }

    pub fn write_csv<W: io::Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER)?;
        for row in &self.rows {
            let count = row.count.as_ref().map(u64::to_string).unwrap_or_default();
            let (num, den) = match row.value() {
                Some(v) => (v.numer().to_string(), v.denom().to_string()),
                None => (String::new(), String::new()),
            };
            w.write_record([
                row.state.to_string(),
                row.p.to_string(),
                row.d.to_string(),
                row.n.to_string(),
                count,
                num,
                den,
                row.status(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is utf-8")
    }

    pub fn to_json(&self) -> serde_json::Value {
        let rows: Vec<_> = self
            .rows
            .iter()
            .map(|r| {
                let value = r.value();
                json!({
                    "state": r.state,
                    "p": r.p,
                    "d": r.d,
                    "n": r.n,
                    "count": r.count.as_ref().ok(),
                    "normalized_value_num": value.as_ref().map(|v| v.numer().to_string()),
                    "normalized_value_den": value.as_ref().map(|v| v.denom().to_string()),
                    "normalized_value_float": value.as_ref().and_then(|v| v.to_f64()),
                    "status": r.status(),
                })
            })
            .collect();
        json!({ "rows": rows })
    }
}

fn compute_row(req: &MomentRequest, n: u64) -> MomentRow {
    let count = match req.state {
        State::Gamma => count_neutral(req.d, n, req.p, req.engine, req.budget),
        State::Theta => theta_moment_unnormalized(req.d, n, req.engine, req.budget),
    };
    MomentRow { state: req.state, p: req.p, d: req.d, n, count }
}

/// One row per requested `n`, in request order. Budget failures are kept in
/// their row; only invalid requests fail as a whole.
pub fn moment_table(req: &MomentRequest) -> Result<MomentTable, MomentError> {
    req.validate()?;
    let run = || MomentTable { rows: req.n_values.iter().map(|&n| compute_row(req, n)).collect() };
    match req.workers {
        None => Ok(run()),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|e| MomentError::Pool(e.to_string()))?;
            Ok(pool.install(run))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const B: u64 = DEFAULT_BUDGET;

    #[test]
    fn two_letter_neutral_words() {
        for p in [2, 3, 5] {
            for n in 1..5 {
                for engine in [Engine::Brute, Engine::Mitm, Engine::Dp] {
                    assert_eq!(count_neutral(2, n, p, engine, B), Ok(2 * n), "{engine} p={p} n={n}");
                }
            }
        }
    }

    #[test]
    fn four_letter_counts() {
        for p in [2, 3] {
            assert_eq!(count_neutral_brute(4, 1, p, B), Ok(6));
        }
        for engine in [Engine::Brute, Engine::Mitm, Engine::Dp] {
            assert_eq!(count_neutral(4, 2, 2, engine, B), Ok(28));
        }
        assert_eq!(gamma_moment(4, 2, 2, Engine::Mitm, B).unwrap(), BigRational::new(28.into(), 16.into()));
    }

    #[test]
    fn odd_lengths() {
        assert_eq!(count_neutral_mitm(3, 4, 3, B), Ok(0));
        assert_eq!(count_neutral_dp(3, 2, 2, B), Ok(0));
        assert_eq!(gamma_moment(5, 2, 2, Engine::Brute, B).unwrap(), BigRational::zero());
    }

    #[test]
    fn budget_is_enforced() {
        assert!(matches!(count_neutral_brute(6, 2, 2, 100), Err(MomentError::BudgetExceeded { .. })));
        assert!(matches!(count_neutral_mitm(6, 2, 2, 100), Err(MomentError::BudgetExceeded { .. })));
        assert!(matches!(count_neutral_dp(6, 2, 2, 100), Err(MomentError::BudgetExceeded { .. })));
        assert!(count_neutral_mitm(6, 2, 2, 128).is_ok());
    }

    #[test]
    fn theta_small_cells() {
        for engine in [Engine::Brute, Engine::Mitm, Engine::Dp] {
            assert_eq!(theta_moment_unnormalized(2, 3, engine, B), Ok(10), "{engine}");
            assert_eq!(theta_moment_unnormalized(4, 2, engine, B), Ok(52), "{engine}");
            assert_eq!(theta_moment_unnormalized(6, 1, engine, B), Ok(20), "{engine}");
        }
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(16, 1), BigUint::from(16u32));
        assert_eq!(binomial(10, 3), BigUint::from(120u32));
        assert_eq!(binomial(-4, 1), BigUint::zero());
        assert_eq!(binomial(2, 3), BigUint::zero());
        assert_eq!(binomial(7, 0), BigUint::from(1u32));
    }

    #[test]
    fn histogram_of_two_letter_words() {
        for engine in [Engine::Brute, Engine::Mitm] {
            let h = tau_histogram(2, 7, 2, engine, B).unwrap();
            assert_eq!(h.count(&[1, 2]), 7);
            assert_eq!(h.count(&[2, 1]), 7);
            assert_eq!(h.total(), 14);
        }
    }

    #[test]
    fn printed_bound_erratum() {
        let h = tau_histogram(2, 10, 2, Engine::Brute, B).unwrap();
        let report = bound_report(&h, B).unwrap();
        assert_eq!(report.records.len(), 2);
        for r in &report.records {
            assert_eq!(r.upper_printed, Some(BigUint::from(4u32)));
            assert_eq!(r.verdicts.upper_printed, Verdict::Fails);
            assert_eq!(r.upper_corrected, Some(BigUint::from(16u32)));
            assert_eq!(r.verdicts.upper_corrected, Verdict::Holds);
            assert_eq!(r.verdicts.lower, Verdict::Skipped);
        }
        assert_eq!(report.errata.len(), 2);
        let json = serde_json::to_value(&report.records[0]).unwrap();
        assert_eq!(json["N"], 10);
        assert_eq!(json["upper_printed"], 4);
        assert_eq!(json["verdicts"]["upper_printed"], "fails");
        assert_eq!(json["lower"], serde_json::Value::Null);
    }

    #[test]
    fn lower_bound_at_threshold() {
        assert_eq!(lower_bound_threshold(2, 2), 19);
        let h = tau_histogram(2, 20, 2, Engine::Mitm, B).unwrap();
        let report = bound_report(&h, B).unwrap();
        for r in &report.records {
            assert_eq!(r.lower, Some(BigUint::from(2u32)));
            assert_eq!(r.verdicts.lower, Verdict::Holds);
        }
    }

    #[test]
    fn rainbow_counts() {
        let m = rainbow_count(2, B).unwrap();
        assert_eq!(m.values().copied().collect::<Vec<_>>(), vec![2]);
        let m = rainbow_count(4, B).unwrap();
        assert_eq!(m.len(), 3);
        assert!(m.values().all(|&c| c == 8));
        assert!(rainbow_count(3, B).is_err());
        assert!(matches!(rainbow_count(10, B), Err(MomentError::BudgetExceeded { .. })));
    }

    #[test]
    fn table_rows_and_csv() {
        let req = MomentRequest {
            p: 2,
            d: 2,
            n_values: vec![1, 2, 3],
            state: State::Theta,
            engine: Engine::Brute,
            budget: B,
            workers: Some(2),
        };
        let table = moment_table(&req).unwrap();
        let csv = table.to_csv_string();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("state,p,d,n,count,normalized_value_num,normalized_value_den,status"));
        assert_eq!(lines.next(), Some("theta,2,2,1,2,1,1,ok"));
        assert_eq!(lines.next(), Some("theta,2,2,2,6,3,2,ok"));
        assert_eq!(lines.next(), Some("theta,2,2,3,10,5,3,ok"));
        assert_eq!(table.to_json()["rows"][2]["count"], 10);
    }

    #[test]
    fn table_keeps_budget_failures_in_row() {
        let req = MomentRequest {
            p: 2,
            d: 4,
            n_values: vec![1, 5],
            state: State::Gamma,
            engine: Engine::Brute,
            budget: 1000,
            workers: None,
        };
        let table = moment_table(&req).unwrap();
        assert_eq!(table.rows[0].count, Ok(6));
        assert!(table.budget_exceeded());
        assert!(table.to_csv_string().lines().nth(2).unwrap().starts_with("gamma,2,4,5,,,,"));
    }

    #[test]
    fn theta_needs_binary_group() {
        let req = MomentRequest {
            p: 3,
            d: 2,
            n_values: vec![1],
            state: State::Theta,
            engine: Engine::Brute,
            budget: B,
            workers: None,
        };
        assert_eq!(moment_table(&req), Err(MomentError::ThetaRequiresP2(3)));
    }
}

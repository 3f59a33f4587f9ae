//! Self-checks runnable from the command line: each suite samples inputs
//! (reproducibly, from a seed) and tests invariants that must hold for any
//! correct build.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::completion::WordSkeleton;
use crate::diagram::{eval_word, TreeDiagram};
use crate::embed::alpha_word;
use crate::moments::{count_neutral, rainbow_count, theta_moment_unnormalized, Engine, MomentError, DEFAULT_BUDGET};
use crate::oriented::{parity_membership, planar_graph, theta};
use crate::rewrite::{is_neutral, normalize, normalize_with};
use crate::word::{Exponent, Index, Letter, Word};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Rewrite,
    Trees,
    Oriented,
    Moments,
    All,
}

impl FromStr for Suite {
    type Err = MomentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "rewrite" => Suite::Rewrite,
            "trees" => Suite::Trees,
            "oriented" => Suite::Oriented,
            "moments" => Suite::Moments,
            "all" => Suite::All,
            _ => return Err(MomentError::UnknownName { kind: "suite", value: s.to_owned() }),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckOutcome {
    pub suite: &'static str,
    pub name: &'static str,
    pub passed: bool,
    /// First counterexample, or a summary of what was checked.
    pub detail: String,
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mark = if self.passed { "ok  " } else { "FAIL" };
        write!(f, "{mark} {}/{}: {}", self.suite, self.name, self.detail)
    }
}

/// A uniformly random word of length `len` over `x_0^±1 .. x_{max_index-1}^±1`.
pub fn random_word(rng: &mut impl Rng, p: u32, len: usize, max_index: Index) -> Word {
    let letters = (0..len)
        .map(|_| {
            let exponent = if rng.random_bool(0.5) { Exponent::Pos } else { Exponent::Neg };
            Letter { index: rng.random_range(0..max_index), exponent }
        })
        .collect();
    Word::new(p, letters).expect("p >= 2")
}

/// Every word of length `len` over `x_0^±1 .. x_{max_index-1}^±1`.
pub fn all_words(p: u32, len: usize, max_index: Index) -> Vec<Word> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<Letter>| {
                (0..max_index).flat_map(move |i| [Letter::pos(i), Letter::neg(i)]).map(move |l| {
                    let mut w = prefix.clone();
                    w.push(l);
                    w
                })
            })
            .collect();
    }
    out.into_iter().map(|letters| Word::new(p, letters).expect("p >= 2")).collect()
}

struct Recorder {
    suite: &'static str,
    out: Vec<CheckOutcome>,
}

impl Recorder {
    /// `check` returns `Err(counterexample)` or `Ok(summary)`.
    fn run(&mut self, name: &'static str, check: impl FnOnce() -> Result<String, String>) {
        let (passed, detail) = match check() {
            Ok(s) => (true, s),
            Err(s) => (false, s),
        };
        self.out.push(CheckOutcome { suite: self.suite, name, passed, detail });
    }
}

fn first_failure<T>(
    items: impl IntoIterator<Item = T>,
    mut bad: impl FnMut(&T) -> Option<String>,
) -> Result<usize, String> {
    let mut seen = 0;
    for item in items {
        if let Some(msg) = bad(&item) {
            return Err(msg);
        }
        seen += 1;
    }
    Ok(seen)
}

pub fn run_suite(suite: Suite, seed: u64) -> Vec<CheckOutcome> {
    match suite {
        Suite::All => [Suite::Rewrite, Suite::Trees, Suite::Oriented, Suite::Moments]
            .into_iter()
            .flat_map(|s| run_suite(s, seed))
            .collect(),
        Suite::Rewrite => rewrite_suite(seed),
        Suite::Trees => trees_suite(seed),
        Suite::Oriented => oriented_suite(seed),
        Suite::Moments => moments_suite(),
    }
}

fn rewrite_suite(seed: u64) -> Vec<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut r = Recorder { suite: "rewrite", out: Vec::new() };
    let samples: Vec<Word> = (0..300)
        .map(|k| {
            let len = rng.random_range(0..9);
            random_word(&mut rng, 2 + (k % 4) as u32, len, 6)
        })
        .collect();

    r.run("confluence", || {
        let mut chooser_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let n = first_failure(&samples, |w| {
            let reference = normalize(w);
            let mut pick = |c: &[usize]| chooser_rng.random_range(0..c.len());
            let other = normalize_with(w, &mut pick);
            (other.normal != reference.normal || other.tau != reference.tau)
                .then(|| format!("{w}: {} vs {}", reference.normal, other.normal))
        })?;
        Ok(format!("{n} words, random redex order"))
    });
    r.run("step-bound", || {
        let n = first_failure(&samples, |w| {
            let steps = normalize(w).steps;
            (steps > w.len() * w.len()).then(|| format!("{w}: {steps} steps"))
        })?;
        Ok(format!("{n} words within d^2 steps"))
    });
    r.run("evaluation-preserved", || {
        let n = first_failure(&samples, |w| (eval_word(w) != eval_word(&normalize(w).normal)).then(|| format!("{w}")))?;
        Ok(format!("{n} words"))
    });
    r.run("neutral-iff-identity", || {
        let mut words = samples.clone();
        for p in [2, 3] {
            words.extend((0..=4).flat_map(|len| all_words(p, len, 3)));
        }
        let n = first_failure(&words, |w| (is_neutral(w) != eval_word(w).is_identity()).then(|| format!("{w}")))?;
        Ok(format!("{n} words"))
    });
    r.run("completion-round-trip", || {
        let mut checked = 0;
        for p in [2, 3] {
            for len in [2, 4] {
                for w in all_words(p, len, 3).into_iter().filter(is_neutral) {
                    let skeleton = WordSkeleton::of_word(&w).map_err(|e| e.to_string())?;
                    if skeleton.complete().as_ref() != Some(&w) {
                        return Err(format!("{w}"));
                    }
                    checked += 1;
                }
            }
        }
        Ok(format!("{checked} neutral words"))
    });
    r.out
}

fn trees_suite(seed: u64) -> Vec<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let mut r = Recorder { suite: "trees", out: Vec::new() };
    r.run("defining-relations", || {
        let mut checked = 0;
        for p in [2u32, 3, 4] {
            for n in 1..=6 {
                for k in 0..n {
                    let lhs = TreeDiagram::generator(n, p).multiply(&TreeDiagram::generator(k, p));
                    let rhs = TreeDiagram::generator(k, p).multiply(&TreeDiagram::generator(n + Index::from(p) - 1, p));
                    if lhs != rhs {
                        return Err(format!("p={p} n={n} k={k}"));
                    }
                    checked += 1;
                }
            }
        }
        Ok(format!("{checked} relations"))
    });
    let triples: Vec<[TreeDiagram; 3]> = (0..60)
        .map(|k| {
            let p = 2 + k % 3;
            std::array::from_fn(|_| eval_word(&random_word(&mut rng, p, 4, 5)))
        })
        .collect();
    r.run("group-laws", || {
        let n = first_failure(&triples, |[a, b, c]| {
            let id = TreeDiagram::identity(a.p());
            let assoc = a.multiply(b).multiply(c) == a.multiply(&b.multiply(c));
            let inverse = a.multiply(&a.inverse()) == id && a.inverse().multiply(a) == id;
            let unit = a.multiply(&id) == *a && id.multiply(a) == *a;
            (!(assoc && inverse && unit)).then(|| format!("{a} / {b} / {c}"))
        })?;
        Ok(format!("{n} triples"))
    });
    r.run("reduce-idempotent", || {
        let n = first_failure(&triples, |[a, _, _]| (a.reduce() != *a || !a.is_reduced()).then(|| a.to_string()))?;
        Ok(format!("{n} diagrams"))
    });
    r.run("abelianization-homomorphism", || {
        let binary: Vec<_> = triples.iter().filter(|t| t[0].p() == 2).collect();
        let n = first_failure(binary, |[a, b, _]| {
            let lhs = a.multiply(b).abelianization().ok()?;
            let rhs = a.abelianization().ok()? + b.abelianization().ok()?;
            (lhs != rhs).then(|| format!("{a} / {b}"))
        })?;
        Ok(format!("{n} pairs"))
    });
    r.run("shift-is-conjugation", || {
        let y0 = TreeDiagram::generator(0, 2);
        for i in 1..=5 {
            let conj = y0.inverse().multiply(&TreeDiagram::generator(i, 2)).multiply(&y0);
            if TreeDiagram::generator(i, 2).shift_right() != conj
                || TreeDiagram::generator(i, 2).shift_right() != TreeDiagram::generator(i + 1, 2)
            {
                return Err(format!("i={i}"));
            }
        }
        Ok("i = 1..5".to_owned())
    });
    r.out
}

fn oriented_suite(seed: u64) -> Vec<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(2));
    let mut r = Recorder { suite: "oriented", out: Vec::new() };
    r.run("theta-vs-parity", || {
        let mut words: Vec<Word> = (0..=3).flat_map(|len| all_words(2, len, 4)).collect();
        words.extend((0..200).map(|_| random_word(&mut rng, 2, 6, 6)));
        let n = first_failure(&words, |w| {
            let t = theta(w).ok()? == 1;
            let parity = parity_membership(&eval_word(w)).ok()?;
            (t != parity).then(|| format!("{w}: theta {t}, parity {parity}"))
        })?;
        Ok(format!("{n} words"))
    });
    r.run("alpha-image-oriented", || {
        let words: Vec<Word> = (0..=3).flat_map(|len| all_words(3, len, 3)).collect();
        let n = first_failure(&words, |w| {
            let image = alpha_word(w).ok()?;
            let rect = eval_word(&image).in_rectangular_subgroup(1, 2).ok()?;
            (theta(&image).ok()? != 1 || !rect).then(|| format!("{w}"))
        })?;
        Ok(format!("{n} words"))
    });
    r.run("graph-shape", || {
        let words: Vec<Word> = (0..100).map(|_| random_word(&mut rng, 2, 5, 5)).collect();
        let n = first_failure(&words, |w| {
            let d = eval_word(&crate::embed::iota_word(w).ok()?);
            let g = planar_graph(&d).ok()?;
            let k = d.top().caret_count();
            let ok = g.vertex_count() == k + 1 && g.edges().len() == 2 * k && g.is_connected();
            (!ok).then(|| format!("{w}"))
        })?;
        Ok(format!("{n} diagrams"))
    });
    r.out
}

fn moments_suite() -> Vec<CheckOutcome> {
    let mut r = Recorder { suite: "moments", out: Vec::new() };
    let b = DEFAULT_BUDGET;
    r.run("engine-equivalence", || {
        let mut cells = 0;
        for p in [2, 3] {
            for d in 0..=4 {
                for n in 1..=2 {
                    let counts: Vec<_> = [Engine::Brute, Engine::Mitm, Engine::Dp]
                        .into_iter()
                        .map(|e| count_neutral(d, n, p, e, b))
                        .collect();
                    if counts.iter().any(|c| *c != counts[0]) {
                        return Err(format!("p={p} d={d} n={n}: {counts:?}"));
                    }
                    cells += 1;
                }
            }
        }
        Ok(format!("{cells} cells"))
    });
    r.run("second-theta-moment", || {
        for n in 1..=5u64 {
            let c = theta_moment_unnormalized(2, n, Engine::Dp, b).map_err(|e| e.to_string())?;
            if c != 4 * n - 2 {
                return Err(format!("n={n}: {c}"));
            }
        }
        Ok("c_n^2 = 4n - 2 for n = 1..5".to_owned())
    });
    r.run("theta-first-column", || {
        for (d, expected) in [(2, 2), (4, 6), (6, 20), (8, 70)] {
            let c = theta_moment_unnormalized(d, 1, Engine::Dp, b).map_err(|e| e.to_string())?;
            if c != expected {
                return Err(format!("d={d}: {c}"));
            }
        }
        Ok("central binomials for d = 2..8".to_owned())
    });
    r.run("rainbow-permutations", || {
        for (d, expected) in [(2usize, 2u64), (4, 8), (6, 48)] {
            let counts = rainbow_count(d, b).map_err(|e| e.to_string())?;
            if counts.values().any(|&c| c != expected) {
                return Err(format!("d={d}"));
            }
        }
        Ok("d!! for d = 2, 4, 6".to_owned())
    });
    r.out
}

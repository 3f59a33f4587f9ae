use fpcalc_core::diagram::eval_word;
use fpcalc_core::partition::invert_permutation;
use fpcalc_core::rewrite::{
    is_neutral, is_normal_form, is_palindromic_normal, normalize, normalize_with, pair_partition, peel_min_index,
};
use fpcalc_core::suite::all_words;
use fpcalc_core::word::{Index, Letter, Word};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn word_strategy(max_len: usize, max_index: Index) -> impl Strategy<Value = Word> {
    (2u32..=5, prop::collection::vec((0..max_index, any::<bool>()), 0..=max_len)).prop_map(|(p, raw)| {
        let letters = raw.into_iter().map(|(i, pos)| if pos { Letter::pos(i) } else { Letter::neg(i) }).collect();
        Word::new(p, letters).unwrap()
    })
}

/// Words with as many positive as negative letters, in random order.
fn balanced_strategy(max_half: usize, max_index: Index) -> impl Strategy<Value = Word> {
    (2u32..=5, 0..=max_half)
        .prop_flat_map(move |(p, k)| {
            (Just(p), prop::collection::vec(0..max_index, k), prop::collection::vec(0..max_index, k))
        })
        .prop_flat_map(|(p, pos, neg)| {
            let letters: Vec<Letter> =
                pos.into_iter().map(Letter::pos).chain(neg.into_iter().map(Letter::neg)).collect();
            (Just(p), Just(letters).prop_shuffle())
        })
        .prop_map(|(p, letters)| Word::new(p, letters).unwrap())
}

/// Index of the input letter that lands in normal-form slot `l` (1-based).
fn source_index(w: &Word, tau: &[usize], l: usize) -> i64 {
    w.letters()[invert_permutation(tau)[l - 1] - 1].index as i64
}

fn neutral_words(p: u32, max_len: usize, max_index: Index) -> Vec<Word> {
    (2..=max_len).step_by(2).flat_map(|len| all_words(p, len, max_index)).filter(is_neutral).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn redex_order_does_not_matter(w in word_strategy(9, 7), seed in any::<u64>()) {
        let reference = normalize(&w);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut random_pick = |c: &[usize]| rng.random_range(0..c.len());
        let other = normalize_with(&w, &mut random_pick);
        prop_assert_eq!(&other.normal, &reference.normal);
        prop_assert_eq!(&other.tau, &reference.tau);
        let mut rightmost = |c: &[usize]| c.len() - 1;
        prop_assert_eq!(normalize_with(&w, &mut rightmost).normal, reference.normal);
    }

    #[test]
    fn at_most_d_squared_steps(w in word_strategy(10, 7)) {
        let d = w.len();
        prop_assert!(normalize(&w).steps <= d * d);
    }

    #[test]
    fn output_is_a_normal_form(w in word_strategy(9, 7)) {
        let trace = normalize(&w);
        prop_assert!(is_normal_form(&trace.normal));
        prop_assert_eq!(normalize(&trace.normal).steps, 0);
        // positives first, then negatives
        let first_neg = trace.normal.letters().iter().position(|l| !l.is_pos()).unwrap_or(w.len());
        prop_assert!(trace.normal.letters()[first_neg..].iter().all(|l| !l.is_pos()));
    }

    #[test]
    fn normalization_preserves_the_value(w in word_strategy(8, 6)) {
        prop_assert_eq!(eval_word(&w), eval_word(&normalize(&w).normal));
    }

    #[test]
    fn indices_drift_at_most_d_times_p_minus_one(w in word_strategy(10, 8)) {
        let trace = normalize(&w);
        let bound = (w.len() as i64) * (i64::from(w.p()) - 1);
        for l in 1..=w.len() {
            let drift = trace.normal.letters()[l - 1].index as i64 - source_index(&w, &trace.tau, l);
            prop_assert!(drift.abs() <= bound, "slot {l}: drift {drift}");
        }
    }

    #[test]
    fn balanced_words_drift_at_most_half(w in balanced_strategy(5, 8)) {
        let trace = normalize(&w);
        let d = w.len();
        let bound = (d as i64) * (i64::from(w.p()) - 1) / 2;
        for l in 1..=d {
            let drift = trace.normal.letters()[l - 1].index as i64 - source_index(&w, &trace.tau, l);
            prop_assert!(drift.abs() <= bound, "slot {l}: drift {drift}");
        }
        prop_assert!(trace.normal.letters()[..d / 2].iter().all(|l| l.is_pos()));
    }

    #[test]
    fn neutral_iff_trivial_value(w in word_strategy(8, 4)) {
        prop_assert_eq!(is_neutral(&w), eval_word(&w).is_identity());
    }

    #[test]
    fn word_times_inverse_of_normal_form_is_neutral(w in word_strategy(6, 6)) {
        let normal = normalize(&w).normal;
        let product = w.concat(&normal.inverse());
        prop_assert!(is_neutral(&product));
        prop_assert!(pair_partition(&product).is_ok());
    }

    #[test]
    fn peeling_keeps_the_value(w in word_strategy(8, 6)) {
        prop_assume!(!w.is_empty());
        let peeled = peel_min_index(&w).unwrap();
        let i0 = peeled.min_index;
        prop_assert!(peeled.core.letters().iter().all(|l| l.index > i0));
        let mut letters = vec![Letter::pos(i0); peeled.leading];
        letters.extend_from_slice(peeled.core.letters());
        letters.extend(std::iter::repeat_n(Letter::neg(i0), peeled.trailing));
        prop_assert_eq!(eval_word(&Word::new(w.p(), letters).unwrap()), eval_word(&w));
    }
}

#[test]
fn minimal_index_letters_cancel_each_other() {
    for p in [2, 3] {
        for w in neutral_words(p, 6, 3) {
            let i0 = w.min_index().unwrap();
            let pi = pair_partition(&w).unwrap();
            for &(a, b) in pi.pairs() {
                let (ia, ib) = (w.letters()[a - 1].index, w.letters()[b - 1].index);
                assert_eq!(ia == i0, ib == i0, "{w}: pair {{{a},{b}}}");
            }
        }
    }
}

#[test]
fn neutral_normal_forms_are_mirrored_and_close() {
    for p in [2, 3] {
        for w in neutral_words(p, 6, 3) {
            let trace = normalize(&w);
            assert!(is_palindromic_normal(&trace.normal), "{w}");
            let d = w.len();
            let j: Vec<i64> = trace.normal.letters().iter().map(|l| l.index as i64).collect();
            let q = i64::from(p) - 1;
            for l in 1..d / 2 {
                assert!(j[l - 1] + q >= j[l], "{w}: slots {l}, {}", l + 1);
            }
            let half_bound = (d as i64) * q / 2;
            for l in 1..=d / 2 {
                assert!((j[l - 1] - source_index(&w, &trace.tau, l)).abs() <= half_bound, "{w}");
            }
            // the two letters of each cancelling pair have nearby indices
            for k in 1..=d / 2 {
                let gap = source_index(&w, &trace.tau, k) - source_index(&w, &trace.tau, d - k + 1);
                assert!(gap.abs() <= (d as i64) * q, "{w}: pair {k}");
            }
        }
    }
}

#[test]
fn two_letter_neutral_words_are_cancelling_pairs() {
    for p in 2..=4 {
        for w in all_words(p, 2, 5) {
            let [a, b] = [w.letters()[0], w.letters()[1]];
            assert_eq!(is_neutral(&w), a.index == b.index && a.exponent != b.exponent, "{w}");
        }
    }
}

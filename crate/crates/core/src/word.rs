//! Letters and words over the infinite generating set `x_0, x_1, ...` of `F_p`.
//!
//! Text syntax: whitespace-separated tokens `x<digits>` with an optional
//! `^-1` suffix. When `p = 2` the symbol `y` is accepted as an alias for `x`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Subscript of a generator.
pub type Index = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Exponent {
    Pos,
    Neg,
}

impl Exponent {
    pub fn as_i32(self) -> i32 {
        match self {
            Exponent::Pos => 1,
            Exponent::Neg => -1,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Exponent::Pos => Exponent::Neg,
            Exponent::Neg => Exponent::Pos,
        }
    }

    pub fn is_pos(self) -> bool {
        self == Exponent::Pos
    }
}

/// A generator `x_index` raised to `±1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Letter {
    pub index: Index,
    pub exponent: Exponent,
}

impl Letter {
    pub const fn pos(index: Index) -> Self {
        Letter { index, exponent: Exponent::Pos }
    }

    pub const fn neg(index: Index) -> Self {
        Letter { index, exponent: Exponent::Neg }
    }

    pub fn inverse(self) -> Self {
        Letter { index: self.index, exponent: self.exponent.flip() }
    }

    pub fn is_pos(self) -> bool {
        self.exponent.is_pos()
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.exponent {
            Exponent::Pos => write!(f, "x{}", self.index),
            Exponent::Neg => write!(f, "x{}^-1", self.index),
        }
    }
}

/// A finite sequence of letters in `F_p`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word {
    p: u32,
    letters: Vec<Letter>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WordError {
    #[error("group parameter p must be at least 2, got {0}")]
    BadParameter(u32),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// A token that does not match the word grammar.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("token {position} `{token}`: {reason}")]
pub struct ParseError {
    /// Zero-based token position.
    pub position: usize,
    pub token: String,
    pub reason: &'static str,
}

impl Word {
    pub fn new(p: u32, letters: Vec<Letter>) -> Result<Self, WordError> {
        if p < 2 {
            return Err(WordError::BadParameter(p));
        }
        Ok(Word { p, letters })
    }

    pub fn empty(p: u32) -> Result<Self, WordError> {
        Word::new(p, Vec::new())
    }

    /// Internal constructor for callers that already hold a valid `p`.
    pub(crate) fn from_parts(p: u32, letters: Vec<Letter>) -> Self {
        debug_assert!(p >= 2);
        Word { p, letters }
    }

    pub fn parse(text: &str, p: u32) -> Result<Self, WordError> {
        if p < 2 {
            return Err(WordError::BadParameter(p));
        }
        let letters = text
            .split_whitespace()
            .enumerate()
            .map(|(position, token)| parse_token(token, position, p))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Word { p, letters })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn exponent_sum(&self) -> i64 {
        self.letters.iter().map(|l| l.exponent.as_i32() as i64).sum()
    }

    pub fn min_index(&self) -> Option<Index> {
        self.letters.iter().map(|l| l.index).min()
    }

    /// Word of the inverse element: reversed, every exponent flipped.
    pub fn inverse(&self) -> Word {
        Word { p: self.p, letters: self.letters.iter().rev().map(|l| l.inverse()).collect() }
    }

    pub fn concat(&self, other: &Word) -> Word {
        assert_eq!(self.p, other.p, "concatenating words over different groups");
        let mut letters = self.letters.clone();
        letters.extend_from_slice(&other.letters);
        Word { p: self.p, letters }
    }
}

fn parse_token(token: &str, position: usize, p: u32) -> Result<Letter, ParseError> {
    let err = |reason| ParseError { position, token: token.to_string(), reason };
    let rest = match token.as_bytes().first() {
        Some(b'x') => &token[1..],
        Some(b'y') if p == 2 => &token[1..],
        Some(b'y') => return Err(err("`y` generators are only available for p = 2")),
        _ => return Err(err("expected a generator `x<digits>`")),
    };
    let (digits, exponent) = match rest.strip_suffix("^-1") {
        Some(d) => (d, Exponent::Neg),
        None => (rest, Exponent::Pos),
    };
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(err("index must be a non-negative decimal integer"));
    }
    let index = digits.parse::<Index>().map_err(|_| err("index too large"))?;
    Ok(Letter { index, exponent })
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, l) in self.letters.iter().enumerate() {
            if k > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

impl Word {
    /// Builds a word from `(index, ±1)` pairs; any positive sign means `+1`.
    pub fn from_signed(p: u32, pairs: &[(Index, i32)]) -> Result<Word, WordError> {
        let letters = pairs
            .iter()
            .map(|&(index, e)| Letter { index, exponent: if e > 0 { Exponent::Pos } else { Exponent::Neg } })
            .collect();
        Word::new(p, letters)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_mixed_exponents() {
        let w = Word::parse("x0 x2^-1", 2).unwrap();
        assert_eq!(w.letters(), &[Letter::pos(0), Letter::neg(2)]);
    }

    #[test]
    fn empty_text_is_empty_word() {
        assert!(Word::parse("", 3).unwrap().is_empty());
        assert!(Word::parse("   ", 3).unwrap().is_empty());
    }

    #[test]
    fn rejects_negative_index() {
        let err = Word::parse("x1 x-1", 2).unwrap_err();
        match err {
            WordError::Parse(e) => {
                assert_eq!(e.position, 1);
                assert_eq!(e.token, "x-1");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_malformed_tokens() {
        for bad in ["z1", "x", "x1^2", "x1^-", "x^-1", "x01a", "1"] {
            assert!(Word::parse(bad, 2).is_err(), "{bad}");
        }
    }

    #[test]
    fn y_alias_only_for_thompson_f() {
        assert_eq!(Word::parse("y0 y1^-1", 2).unwrap(), Word::parse("x0 x1^-1", 2).unwrap());
        assert!(Word::parse("y0", 3).is_err());
    }

    #[test]
    fn rejects_small_p() {
        assert_eq!(Word::parse("x0", 1), Err(WordError::BadParameter(1)));
    }

    #[test]
    fn inverse_reverses_and_flips() {
        let w = Word::parse("x0 x3^-1 x1", 3).unwrap();
        assert_eq!(w.inverse().to_string(), "x1^-1 x3 x0^-1");
    }

    proptest::proptest! {
        #[test]
        fn text_round_trip(raw in proptest::collection::vec((0u64..1_000_000, proptest::bool::ANY), 0..12), p in 2u32..7) {
            let letters: Vec<Letter> = raw
                .into_iter()
                .map(|(i, pos)| if pos { Letter::pos(i) } else { Letter::neg(i) })
                .collect();
            let w = Word::new(p, letters).unwrap();
            let back = Word::parse(&w.to_string(), p).unwrap();
            proptest::prop_assert_eq!(back, w);
        }
    }
}

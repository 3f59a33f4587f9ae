//! Letterwise homomorphisms between `F = F_2` and `F_3`.

use crate::diagram::DiagramError;
use crate::word::{Letter, Word};

/// `y_i^e -> x_{2i}^e`: the embedding of `F` into `F_3`.
pub fn iota_word(w: &Word) -> Result<Word, DiagramError> {
    expect_p(w, 2)?;
    let letters = w.letters().iter().map(|l| Letter { index: 2 * l.index, ..*l }).collect();
    Ok(Word::from_parts(3, letters))
}

/// `x_i -> y_i y_{i+1}` and `x_i^-1 -> y_{i+1}^-1 y_i^-1`: the isomorphism
/// of `F_3` onto the oriented subgroup of `F`.
pub fn alpha_word(w: &Word) -> Result<Word, DiagramError> {
    expect_p(w, 3)?;
    let mut letters = Vec::with_capacity(2 * w.len());
    for l in w.letters() {
        if l.is_pos() {
            letters.extend([Letter::pos(l.index), Letter::pos(l.index + 1)]);
        } else {
            letters.extend([Letter::neg(l.index + 1), Letter::neg(l.index)]);
        }
    }
    Ok(Word::from_parts(2, letters))
}

fn expect_p(w: &Word, p: u32) -> Result<(), DiagramError> {
    if w.p() != p {
        return Err(DiagramError::WrongArity { expected: p, got: w.p() });
    }
    Ok(())
}

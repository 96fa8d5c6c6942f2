//! Group-commutator words `phi_alpha(t)`.
//!
//! For `alpha = (j, beta)` the word is built recursively as
//! `exp(t1 Y_j)`, then `phi_beta(t')`, then `exp(-t1 Y_j)`, then
//! `phi_beta(t')^-1`, listed in the order the factors act. Evaluating a word
//! multiplies the letters on the right, i.e. follows the flows of the
//! left-invariant fields, so the result starting from the identity is the
//! group commutator `g phi_beta g^-1 phi_beta^-1`.

use std::fmt;

use super::{GroupPoint, LieStructure};
use crate::error::{param, Error, Result};
use crate::scalar::Scalar;

/// One factor `exp(sign * t_param * Y_generator)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Letter {
    pub sign: i8,
    /// 0-based index into the parameter vector.
    pub param: usize,
    /// 0-based generator index.
    pub generator: usize,
}

/// Letters in the order they act.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Word {
    pub letters: Vec<Letter>,
    pub arity: usize,
}

impl Word {
    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn inverse(&self) -> Word {
        Word { letters: self.letters.iter().rev().map(|l| Letter { sign: -l.sign, ..*l }).collect(), arity: self.arity }
    }

    /// Number of letters carrying parameter `l` (0-based).
    pub fn param_count(&self, l: usize) -> usize {
        self.letters.iter().filter(|x| x.param == l).count()
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, l) in self.letters.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            let s = if l.sign > 0 { '+' } else { '-' };
            write!(f, "e^{{{s}t{} Z{}}}", l.param + 1, l.generator + 1)?;
        }
        Ok(())
    }
}

/// Commutator word for the multi-index `alpha` (0-based generator indices).
pub fn commutator_word(s: &LieStructure, alpha: &[usize]) -> Result<Word> {
    if alpha.is_empty() {
        return param("empty multi-index");
    }
    if alpha.len() > s.step() {
        return param(format!("|alpha| = {} exceeds step r = {}", alpha.len(), s.step()));
    }
    if let Some(&g) = alpha.iter().find(|&&g| g >= s.generators()) {
        return param(format!("generator index {g} out of range"));
    }
    Ok(build(alpha, 0))
}

fn build(alpha: &[usize], offset: usize) -> Word {
    let head = Letter { sign: 1, param: offset, generator: alpha[0] };
    if alpha.len() == 1 {
        return Word { letters: vec![head], arity: 1 };
    }
    let inner = build(&alpha[1..], offset + 1);
    let mut letters = Vec::with_capacity(2 * inner.len() + 2);
    letters.push(head);
    letters.extend_from_slice(&inner.letters);
    letters.push(Letter { sign: -1, ..head });
    letters.extend(inner.inverse().letters);
    Word { letters, arity: alpha.len() }
}

/// Evaluates `word` at parameters `t`, starting from the identity.
pub fn evaluate_word<T: Scalar>(s: &LieStructure, word: &Word, t: &[T]) -> Result<GroupPoint<T>> {
    evaluate_word_at(s, word, t, &GroupPoint::identity(s))
}

/// Evaluates `word` at parameters `t` starting from `base`, i.e.
/// `base * g_1 * ... * g_b`.
pub fn evaluate_word_at<T: Scalar>(
    s: &LieStructure,
    word: &Word,
    t: &[T],
    base: &GroupPoint<T>,
) -> Result<GroupPoint<T>> {
    if t.len() != word.arity {
        return Err(Error::DimensionMismatch { expected: word.arity, found: t.len() });
    }
    s.check_dim(base.coords.len())?;
    let mut w = base.clone();
    for l in &word.letters {
        let c = if l.sign > 0 { t[l.param].clone() } else { -t[l.param].clone() };
        w = s.product_unchecked(&w, &GroupPoint::generator(s, l.generator, c));
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::super::{build_free_nilpotent, walk_constants};
    use super::*;
    use num_rational::BigRational;

    #[test]
    fn two_letter_commutator_word() {
        let s = build_free_nilpotent(2, 2).unwrap();
        let w = commutator_word(&s, &[0, 1]).unwrap();
        let expect = [(1, 0, 0), (1, 1, 1), (-1, 0, 0), (-1, 1, 1)];
        assert_eq!(w.len(), 4);
        for (l, &(sign, param, generator)) in w.letters.iter().zip(&expect) {
            assert_eq!(*l, Letter { sign, param, generator });
        }
    }

    #[test]
    fn single_letter_and_lengths() {
        let s = build_free_nilpotent(2, 3).unwrap();
        let w = commutator_word(&s, &[1]).unwrap();
        assert_eq!(w.letters, vec![Letter { sign: 1, param: 0, generator: 1 }]);
        let b = walk_constants(&s).b;
        assert_eq!(commutator_word(&s, &[0, 1, 1]).unwrap().len(), b[2]);
        assert_eq!(b[2], 10);
        assert!(commutator_word(&s, &[0, 1, 0, 1]).is_err());
    }

    #[test]
    fn letter_count_invariants() {
        let s = build_free_nilpotent(3, 5).unwrap();
        for alpha in [vec![0, 1], vec![2, 0, 1], vec![0, 1, 2, 1], vec![1, 0, 2, 2, 0]] {
            let k = alpha.len();
            let w = commutator_word(&s, &alpha).unwrap();
            let b = 3 * (1usize << (k - 1)) - 2;
            assert_eq!(w.len(), b);
            for j in 1..k {
                assert_eq!(w.param_count(j - 1), 1 << j, "alpha {alpha:?} param {j}");
            }
            assert_eq!(w.param_count(k - 1), 1 << (k - 1));
            assert_eq!((w.letters[0].sign, w.letters[0].param), (1, 0));
            // the inverse head letter sits right after the first phi_beta block
            let mid = w.letters[b / 2];
            assert_eq!((mid.sign, mid.param), (-1, 0));
            for l in &w.letters {
                assert_eq!(l.generator, alpha[l.param]);
            }
        }
    }

    #[test]
    fn heisenberg_commutator_is_exact() {
        let s = build_free_nilpotent(2, 2).unwrap();
        let w = commutator_word(&s, &[0, 1]).unwrap();
        let t = [BigRational::from_ratio(3, 7), BigRational::from_ratio(-5, 2)];
        let g = evaluate_word(&s, &w, &t).unwrap();
        let zero = BigRational::from_int(0);
        assert_eq!(g.coords, vec![zero.clone(), zero, t[0].clone() * t[1].clone()]);
    }

    #[test]
    fn vanishing_parameter_gives_identity() {
        let s = build_free_nilpotent(2, 4).unwrap();
        let w = commutator_word(&s, &[0, 1, 0, 1]).unwrap();
        for zero_at in 0..4 {
            let mut t: Vec<f64> = vec![0.3, -0.7, 1.1, 0.4];
            t[zero_at] = 0.0;
            let g = evaluate_word(&s, &w, &t).unwrap();
            assert!(g.coords.iter().all(|c| c.abs() < 1e-15), "{g:?}");
        }
    }

    #[test]
    fn arity_mismatch() {
        let s = build_free_nilpotent(2, 2).unwrap();
        let w = commutator_word(&s, &[0, 1]).unwrap();
        assert!(evaluate_word(&s, &w, &[1.0]).is_err());
    }
}

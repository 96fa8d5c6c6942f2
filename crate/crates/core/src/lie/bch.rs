//! Truncated Baker-Campbell-Hausdorff series in Dynkin form.
//!
//! `log(exp X exp Y) = sum_n (-1)^(n-1)/n sum [X^p1 Y^q1 ... X^pn Y^qn]
//!  / ((sum p_i + q_i) prod p_i! q_i!)`, where `[w]` is the right-nested
//! bracket of the word `w`. Terms are merged per word with exact rational
//! coefficients and truncated at total degree `r`.

use std::collections::BTreeMap;

use num_rational::Rational64;
use num_traits::{One, Zero};

/// Letters of a BCH word: `false` is `X`, `true` is `Y`.
pub type BchWord = Vec<bool>;

#[derive(Debug, Clone)]
pub struct BchSeries {
    terms: Vec<(BchWord, Rational64)>,
}

impl BchSeries {
    pub fn new(r: usize) -> Self {
        let mut acc: BTreeMap<BchWord, Rational64> = BTreeMap::new();
        for n in 1..=r {
            let sign = if n % 2 == 1 { 1 } else { -1 };
            let mut pairs = Vec::with_capacity(n);
            enumerate(n, r, &mut pairs, &mut |pairs: &[(usize, usize)]| {
                let degree: usize = pairs.iter().map(|(p, q)| p + q).sum();
                let mut denom: i64 = (n * degree) as i64;
                let mut word = BchWord::with_capacity(degree);
                for &(p, q) in pairs {
                    denom *= factorial(p) * factorial(q);
                    word.extend(std::iter::repeat_n(false, p));
                    word.extend(std::iter::repeat_n(true, q));
                }
                if vanishes(&word) {
                    return;
                }
                *acc.entry(word).or_insert_with(Rational64::zero) += Rational64::new(sign, denom);
            });
        }
        let mut terms: Vec<_> = acc.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        terms.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.0.cmp(&b.0)));
        Self { terms }
    }

    /// Words with their merged coefficients, shortest first.
    pub fn terms(&self) -> &[(BchWord, Rational64)] {
        &self.terms
    }

    /// Coefficient of a word (zero when absent).
    pub fn coefficient(&self, word: &[bool]) -> Rational64 {
        self.terms.iter().find(|(w, _)| w.as_slice() == word).map(|(_, c)| *c).unwrap_or_else(Rational64::zero)
    }
}

/// Right-nested brackets of words ending in a repeated letter are zero.
fn vanishes(word: &[bool]) -> bool {
    word.len() >= 2 && word[word.len() - 1] == word[word.len() - 2]
}

fn enumerate(n: usize, budget: usize, pairs: &mut Vec<(usize, usize)>, emit: &mut impl FnMut(&[(usize, usize)])) {
    if pairs.len() == n {
        emit(pairs);
        return;
    }
    let remaining_slots = n - pairs.len() - 1;
    for total in 1..=budget.saturating_sub(remaining_slots) {
        for p in 0..=total {
            pairs.push((p, total - p));
            enumerate(n, budget - total, pairs, emit);
            pairs.pop();
        }
    }
}

fn factorial(k: usize) -> i64 {
    (1..=k as i64).product::<i64>().max(One::one())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Vec<bool> {
        s.chars().map(|c| c == 'Y').collect()
    }

    #[test]
    fn low_order_coefficients() {
        let s = BchSeries::new(4);
        assert_eq!(s.coefficient(&w("X")), Rational64::new(1, 1));
        assert_eq!(s.coefficient(&w("Y")), Rational64::new(1, 1));
        // [X,Y]/2 appears as XY/4 - YX/4 as words
        assert_eq!(s.coefficient(&w("XY")) - s.coefficient(&w("YX")), Rational64::new(1, 2));
    }

    #[test]
    fn truncation_respects_degree() {
        for r in 1..=5 {
            assert!(BchSeries::new(r).terms().iter().all(|(w, _)| w.len() <= r));
        }
        assert_eq!(BchSeries::new(1).terms().len(), 2);
    }
}

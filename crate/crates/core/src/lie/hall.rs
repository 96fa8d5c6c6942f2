//! Hall basis of the free nilpotent Lie algebra and its structure constants.
//!
//! Basis elements are right-nested: a bracket `[a, b]` is basic when `a < b`
//! in basis order and, if `b = [b1, b2]`, then `b1 <= a`. Order is by weight
//! first, then lexicographic in `(a, b)` within a weight. Brackets of basic
//! elements are rewritten into basic combinations with the derivation rule
//! `[a, [b1, b2]] = [[a, b1], b2] + [b1, [a, b2]]`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

/// A Hall word, stored by reference to earlier basis indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HallWord {
    Generator(usize),
    Bracket(usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasisElement {
    pub word: HallWord,
    pub weight: usize,
}

/// Sparse integer combination of basis elements, sorted by index.
pub type Combination = Vec<(usize, i64)>;

pub(crate) struct HallBasis {
    pub elements: Vec<BasisElement>,
    pub lookup: HashMap<(usize, usize), usize>,
}

impl HallBasis {
    pub fn build(p: usize, r: usize) -> Self {
        let mut elements: Vec<BasisElement> =
            (0..p).map(|g| BasisElement { word: HallWord::Generator(g), weight: 1 }).collect();
        let mut lookup = HashMap::new();
        for n in 2..=r {
            let mut fresh = Vec::new();
            for a in 0..elements.len() {
                for b in (a + 1)..elements.len() {
                    if elements[a].weight + elements[b].weight != n {
                        continue;
                    }
                    let admissible = match elements[b].word {
                        HallWord::Generator(_) => true,
                        HallWord::Bracket(b1, _) => b1 <= a,
                    };
                    if admissible {
                        fresh.push((a, b));
                    }
                }
            }
            for (a, b) in fresh {
                lookup.insert((a, b), elements.len());
                elements.push(BasisElement { word: HallWord::Bracket(a, b), weight: n });
            }
        }
        Self { elements, lookup }
    }

    /// Full table of brackets between basis elements whose weights sum to at
    /// most `r`; indexed `a * dim + b`.
    pub fn structure_table(&self, r: usize) -> Vec<Combination> {
        let dim = self.elements.len();
        let mut rw = Rewriter { basis: self, r, memo: HashMap::new() };
        let mut table = vec![Vec::new(); dim * dim];
        for a in 0..dim {
            for b in 0..dim {
                if self.elements[a].weight + self.elements[b].weight <= r {
                    table[a * dim + b] = rw.bracket(a, b);
                }
            }
        }
        table
    }
}

pub(crate) fn fmt_word(elements: &[BasisElement], idx: usize, f: &mut impl fmt::Write) -> fmt::Result {
    match elements[idx].word {
        HallWord::Generator(g) => write!(f, "Y{}", g + 1),
        HallWord::Bracket(a, b) => {
            f.write_char('[')?;
            fmt_word(elements, a, f)?;
            f.write_char(',')?;
            fmt_word(elements, b, f)?;
            f.write_char(']')
        }
    }
}

struct Rewriter<'a> {
    basis: &'a HallBasis,
    r: usize,
    memo: HashMap<(usize, usize), Combination>,
}

impl Rewriter<'_> {
    fn bracket(&mut self, a: usize, b: usize) -> Combination {
        if a == b {
            return Vec::new();
        }
        let (wa, wb) = (self.basis.elements[a].weight, self.basis.elements[b].weight);
        if wa + wb > self.r {
            return Vec::new();
        }
        if a > b {
            return self.bracket(b, a).into_iter().map(|(i, c)| (i, -c)).collect();
        }
        if let Some(hit) = self.memo.get(&(a, b)) {
            return hit.clone();
        }
        let out = match self.basis.elements[b].word {
            HallWord::Bracket(b1, b2) if b1 > a => {
                let mut acc = BTreeMap::new();
                for (x, c) in self.bracket(a, b1) {
                    for (i, d) in self.bracket(x, b2) {
                        *acc.entry(i).or_insert(0) += c * d;
                    }
                }
                for (y, c) in self.bracket(a, b2) {
                    for (i, d) in self.bracket(b1, y) {
                        *acc.entry(i).or_insert(0) += c * d;
                    }
                }
                acc.into_iter().filter(|&(_, c)| c != 0).collect()
            }
            _ => {
                let idx = self.basis.lookup[&(a, b)];
                vec![(idx, 1)]
            }
        };
        self.memo.insert((a, b), out.clone());
        out
    }
}

/// Dimension of the degree-`n` component of the free Lie algebra on `p`
/// generators (necklace count).
pub fn witt_dimension(p: usize, n: usize) -> usize {
    let mut total: i64 = 0;
    for d in 1..=n {
        if n.is_multiple_of(d) {
            total += mobius(d) * (p as i64).pow((n / d) as u32);
        }
    }
    (total / n as i64) as usize
}

fn mobius(mut n: usize) -> i64 {
    let mut result = 1;
    let mut f = 2;
    while f * f <= n {
        if n.is_multiple_of(f) {
            n /= f;
            if n.is_multiple_of(f) {
                return 0;
            }
            result = -result;
        }
        f += 1;
    }
    if n > 1 {
        result = -result;
    }
    result
}

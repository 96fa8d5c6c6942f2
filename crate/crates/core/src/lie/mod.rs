//! Free step-`r` nilpotent Lie algebra on `p` generators, realized in a Hall
//! basis, and the associated simply connected group in exponential
//! coordinates.

mod bch;
mod check;
mod group;
mod hall;
mod walk;
mod words;

use std::fmt::Write as _;

use num_rational::Rational64;

use crate::error::{param, Error, Result};
use crate::scalar::Scalar;

pub use bch::BchSeries;
pub use check::{lie_check, LieCheckReport};
pub use group::GroupPoint;
pub use hall::{witt_dimension, BasisElement, Combination, HallWord};
pub use walk::{box_volume_mc, sample_box, walk_constants, WalkConstants};
pub use words::{commutator_word, evaluate_word, evaluate_word_at, Letter, Word};

pub const MAX_GENERATORS: usize = 4;
pub const MAX_STEP: usize = 5;

/// Immutable description of the free nilpotent algebra: basis, grading and
/// integer structure constants `[Y^a, Y^b] = sum_c c^c_{ab} Y^c`.
#[derive(Debug, Clone)]
pub struct LieStructure {
    p: usize,
    r: usize,
    basis: Vec<BasisElement>,
    /// `layer_start[j]` is the first index of layer `j + 1`; has `r + 1` entries.
    layer_start: Vec<usize>,
    table: Vec<Combination>,
    bch: BchSeries,
}

/// Builds the free nilpotent Lie algebra with `p` generators and step `r`.
pub fn build_free_nilpotent(p: usize, r: usize) -> Result<LieStructure> {
    if !(1..=MAX_GENERATORS).contains(&p) {
        return param(format!("generator count p = {p} outside 1..={MAX_GENERATORS}"));
    }
    if !(1..=MAX_STEP).contains(&r) {
        return param(format!("step r = {r} outside 1..={MAX_STEP}"));
    }
    let hall = hall::HallBasis::build(p, r);
    let table = hall.structure_table(r);
    let mut layer_start = vec![0; r + 1];
    for j in 1..=r {
        layer_start[j] = hall.elements.iter().filter(|e| e.weight <= j).count();
    }
    Ok(LieStructure { p, r, basis: hall.elements, layer_start, table, bch: BchSeries::new(r) })
}

impl LieStructure {
    pub fn generators(&self) -> usize {
        self.p
    }

    pub fn step(&self) -> usize {
        self.r
    }

    /// Total dimension `D`.
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Layer dimensions `a_1, ..., a_r`.
    pub fn layer_dims(&self) -> Vec<usize> {
        (0..self.r).map(|j| self.layer_start[j + 1] - self.layer_start[j]).collect()
    }

    /// Homogeneous dimension `Q = sum_j j a_j`.
    pub fn homogeneous_dim(&self) -> usize {
        self.layer_dims().iter().enumerate().map(|(j, a)| (j + 1) * a).sum()
    }

    pub fn basis(&self) -> &[BasisElement] {
        &self.basis
    }

    /// Weight (layer) of basis element `idx`.
    pub fn weight(&self, idx: usize) -> usize {
        self.basis[idx].weight
    }

    /// Index range of layer `j` (1-based).
    pub fn layer_range(&self, j: usize) -> std::ops::Range<usize> {
        self.layer_start[j - 1]..self.layer_start[j]
    }

    pub fn word_name(&self, idx: usize) -> String {
        let mut s = String::new();
        let _ = hall::fmt_word(&self.basis, idx, &mut s);
        s
    }

    /// Sparse structure constants for the pair `(a, b)`.
    pub fn bracket_basis(&self, a: usize, b: usize) -> &[(usize, i64)] {
        &self.table[a * self.dim() + b]
    }

    /// All nonzero structure constants as `(alpha, beta, gamma, c)`.
    pub fn structure_constants(&self) -> impl Iterator<Item = (usize, usize, usize, Rational64)> + '_ {
        let d = self.dim();
        (0..d * d).flat_map(move |ab| {
            self.table[ab].iter().map(move |&(g, c)| (ab / d, ab % d, g, Rational64::from_integer(c)))
        })
    }

    /// CSV dump of the structure constants with header
    /// `alpha,beta,gamma,numerator,denominator`.
    pub fn structure_constants_csv(&self) -> String {
        let mut out = String::from("alpha,beta,gamma,numerator,denominator\n");
        for (a, b, g, c) in self.structure_constants() {
            let _ = writeln!(out, "{a},{b},{g},{},{}", c.numer(), c.denom());
        }
        out
    }

    pub fn bch(&self) -> &BchSeries {
        &self.bch
    }

    pub(crate) fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: len });
        }
        Ok(())
    }

    /// Lie bracket of two algebra vectors in Hall coordinates.
    pub fn bracket<T: Scalar>(&self, a: &[T], b: &[T]) -> Result<Vec<T>> {
        self.check_dim(a.len())?;
        self.check_dim(b.len())?;
        Ok(self.bracket_unchecked(a, b))
    }

    pub(crate) fn bracket_unchecked<T: Scalar>(&self, a: &[T], b: &[T]) -> Vec<T> {
        let d = self.dim();
        let mut out = vec![T::zero(); d];
        for (i, ai) in a.iter().enumerate() {
            if ai.is_zero() {
                continue;
            }
            let wi = self.basis[i].weight;
            for (j, bj) in b.iter().enumerate().take(self.layer_start[self.r - wi.min(self.r)]) {
                if bj.is_zero() {
                    continue;
                }
                let row = &self.table[i * d + j];
                if row.is_empty() {
                    continue;
                }
                let prod = ai.clone() * bj.clone();
                for &(g, c) in row {
                    out[g] = out[g].clone() + prod.clone() * T::from_int(c);
                }
            }
        }
        out
    }

    /// Basis vector `Y^idx`.
    pub fn unit<T: Scalar>(&self, idx: usize) -> Vec<T> {
        let mut v = vec![T::zero(); self.dim()];
        v[idx] = T::one();
        v
    }

    /// Right-nested bracket `[Y_{a1}, [Y_{a2}, ... Y_{ak}]]` of generators
    /// (0-based generator indices).
    pub fn nested_generator_bracket<T: Scalar>(&self, alpha: &[usize]) -> Result<Vec<T>> {
        if alpha.is_empty() {
            return param("empty multi-index");
        }
        if let Some(&g) = alpha.iter().find(|&&g| g >= self.p) {
            return param(format!("generator index {g} out of range for p = {}", self.p));
        }
        let mut v = self.unit::<T>(alpha[alpha.len() - 1]);
        for &g in alpha[..alpha.len() - 1].iter().rev() {
            v = self.bracket_unchecked(&self.unit::<T>(g), &v);
        }
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    fn heis() -> LieStructure {
        build_free_nilpotent(2, 2).unwrap()
    }

    #[test]
    fn dimensions_match_examples() {
        let s = heis();
        assert_eq!(s.layer_dims(), vec![2, 1]);
        assert_eq!((s.dim(), s.homogeneous_dim()), (3, 4));
        let s = build_free_nilpotent(2, 3).unwrap();
        assert_eq!(s.layer_dims(), vec![2, 1, 2]);
        assert_eq!((s.dim(), s.homogeneous_dim()), (5, 10));
        let s = build_free_nilpotent(1, 1).unwrap();
        assert_eq!((s.layer_dims(), s.dim(), s.homogeneous_dim()), (vec![1], 1, 1));
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(build_free_nilpotent(0, 2).is_err());
        assert!(build_free_nilpotent(5, 2).is_err());
        assert!(build_free_nilpotent(2, 0).is_err());
        assert!(build_free_nilpotent(2, 6).is_err());
    }

    #[test]
    fn heisenberg_bracket() {
        let s = heis();
        let y1 = s.unit::<BigRational>(0);
        let y2 = s.unit::<BigRational>(1);
        assert_eq!(s.bracket(&y1, &y2).unwrap(), s.unit::<BigRational>(2));
        assert_eq!(
            s.bracket(&y2, &y1).unwrap(),
            vec![BigRational::from_int(0), BigRational::from_int(0), BigRational::from_int(-1)]
        );
        let v: Vec<f64> = vec![0.3, -1.2, 0.7];
        assert!(s.bracket(&v, &v).unwrap().iter().all(|x| *x == 0.0));
        assert!(s.bracket(&v, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn step_three_bracket_lands_on_hall_element() {
        let s = build_free_nilpotent(2, 3).unwrap();
        let y12 = s.nested_generator_bracket::<Rational64>(&[0, 1]).unwrap();
        let out = s.bracket(&s.unit::<Rational64>(0), &y12).unwrap();
        assert_eq!(out, s.unit::<Rational64>(3));
        assert_eq!(s.word_name(3), "[Y1,[Y1,Y2]]");
    }

    #[test]
    fn brackets_beyond_step_vanish() {
        let s = heis();
        let y12 = s.unit::<f64>(2);
        assert!(s.bracket(&s.unit::<f64>(0), &y12).unwrap().iter().all(|x| *x == 0.0));
    }

    #[test]
    fn csv_dump_header_and_rows() {
        let csv = heis().structure_constants_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "alpha,beta,gamma,numerator,denominator");
        assert!(lines.contains(&"0,1,2,1,1"));
        assert!(lines.contains(&"1,0,2,-1,1"));
        assert_eq!(lines.len(), 3);
    }
}

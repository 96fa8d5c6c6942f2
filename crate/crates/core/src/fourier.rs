//! Truncated complex-exponential basis `e_{m,n}(x, y) = e^{2 pi i (m x + n y)}`
//! on the unit torus, `|m|, |n| <= M`.

use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::models::Point2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FourierBasis {
    pub cutoff: usize,
}

impl FourierBasis {
    pub fn new(cutoff: usize) -> Self {
        Self { cutoff }
    }

    /// Number of modes per axis, `2M + 1`.
    pub fn side(&self) -> usize {
        2 * self.cutoff + 1
    }

    pub fn dim(&self) -> usize {
        self.side() * self.side()
    }

    /// Flat index of mode `(m, n)`, `y`-frequency major.
    pub fn index(&self, m: i64, n: i64) -> Option<usize> {
        let c = self.cutoff as i64;
        if m.abs() > c || n.abs() > c {
            return None;
        }
        Some(((n + c) as usize) * self.side() + (m + c) as usize)
    }

    pub fn mode(&self, idx: usize) -> (i64, i64) {
        let c = self.cutoff as i64;
        ((idx % self.side()) as i64 - c, (idx / self.side()) as i64 - c)
    }

    pub fn frequencies(&self) -> impl Iterator<Item = i64> {
        let c = self.cutoff as i64;
        -c..=c
    }
}

/// Real trigonometric term `cos * cos(2 pi (m x + n y)) + sin * sin(2 pi (m x + n y))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub m: i64,
    pub n: i64,
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrigPoly {
    pub terms: Vec<TrigTerm>,
}

impl TrigPoly {
    pub fn cosine(m: i64, n: i64, c: f64) -> Self {
        Self { terms: vec![TrigTerm { m, n, cos: c, sin: 0.0 }] }
    }

    pub fn constant(c: f64) -> Self {
        Self::cosine(0, 0, c)
    }

    pub fn plus(mut self, other: TrigPoly) -> Self {
        self.terms.extend(other.terms);
        self
    }

    pub fn max_frequency(&self) -> usize {
        self.terms.iter().map(|t| t.m.unsigned_abs().max(t.n.unsigned_abs())).max().unwrap_or(0) as usize
    }

    pub fn eval(&self, x: Point2) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let phase = TAU * (t.m as f64 * x[0] + t.n as f64 * x[1]);
                t.cos * phase.cos() + t.sin * phase.sin()
            })
            .sum()
    }

    pub fn coefficients(&self, basis: FourierBasis) -> Result<FourierCoeffs> {
        if self.max_frequency() > basis.cutoff {
            return param(format!(
                "trigonometric polynomial of frequency {} exceeds cutoff {}",
                self.max_frequency(),
                basis.cutoff
            ));
        }
        let mut c = FourierCoeffs::zeros(basis);
        for t in &self.terms {
            let half = Complex64::new(0.5 * t.cos, -0.5 * t.sin);
            c.data[basis.index(t.m, t.n).unwrap()] += half;
            c.data[basis.index(-t.m, -t.n).unwrap()] += half.conj();
        }
        Ok(c)
    }
}

/// Coefficient vector in a [`FourierBasis`], indexed by [`FourierBasis::index`].
#[derive(Debug, Clone, PartialEq)]
pub struct FourierCoeffs {
    pub basis: FourierBasis,
    pub data: Vec<Complex64>,
}

impl FourierCoeffs {
    pub fn zeros(basis: FourierBasis) -> Self {
        Self { basis, data: vec![Complex64::new(0.0, 0.0); basis.dim()] }
    }

    pub fn get(&self, m: i64, n: i64) -> Complex64 {
        self.basis.index(m, n).map_or(Complex64::new(0.0, 0.0), |i| self.data[i])
    }

    /// Real part of the represented function at `x`.
    pub fn eval(&self, x: Point2) -> f64 {
        self.data
            .iter()
            .enumerate()
            .filter(|(_, c)| c.re != 0.0 || c.im != 0.0)
            .map(|(i, c)| {
                let (m, n) = self.basis.mode(i);
                let phase = TAU * (m as f64 * x[0] + n as f64 * x[1]);
                c.re * phase.cos() - c.im * phase.sin()
            })
            .sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `<self, other>` in `L^2` with normalized measure.
    pub fn inner(&self, other: &FourierCoeffs) -> Complex64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn sub(&self, other: &FourierCoeffs) -> FourierCoeffs {
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        FourierCoeffs { basis: self.basis, data }
    }

    /// Real part on the `q x q` grid `(i/q, j/q)`, row `j` (the `y` index) major.
    pub fn grid_values(&self, q: usize) -> Vec<f64> {
        let mut grid = vec![Complex64::new(0.0, 0.0); q * q];
        for (i, c) in self.data.iter().enumerate() {
            let (m, n) = self.basis.mode(i);
            let (a, b) = (m.rem_euclid(q as i64) as usize, n.rem_euclid(q as i64) as usize);
            grid[b * q + a] += c;
        }
        let plan = FftPlanner::new().plan_fft_inverse(q);
        fft2(&mut grid, q, &plan);
        grid.into_iter().map(|z| z.re).collect()
    }

    /// Grid maximum of `|Re f|` on the default evaluation grid of `4(2M+1)` points per axis.
    pub fn sup_norm(&self) -> f64 {
        self.grid_values(4 * self.basis.side()).into_iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// In-place 2D transform of a row-major `q x q` array.
pub(crate) fn fft2(grid: &mut [Complex64], q: usize, plan: &Arc<dyn Fft<f64>>) {
    for row in grid.chunks_mut(q) {
        plan.process(row);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); q];
    for a in 0..q {
        for (b, c) in col.iter_mut().enumerate() {
            *c = grid[b * q + a];
        }
        plan.process(&mut col);
        for (b, c) in col.iter().enumerate() {
            grid[b * q + a] = *c;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_round_trip() {
        let b = FourierBasis::new(3);
        for i in 0..b.dim() {
            let (m, n) = b.mode(i);
            assert_eq!(b.index(m, n), Some(i));
        }
        assert_eq!(b.index(4, 0), None);
    }

    #[test]
    fn trig_coefficients_are_hermitian() {
        let b = FourierBasis::new(3);
        let f = TrigPoly { terms: vec![TrigTerm { m: 1, n: -2, cos: 0.7, sin: -0.4 }] }.plus(TrigPoly::constant(2.0));
        let c = f.coefficients(b).unwrap();
        assert_eq!(c.get(0, 0), Complex64::new(2.0, 0.0));
        assert_eq!(c.get(1, -2), c.get(-1, 2).conj());
        for p in [[0.1, 0.7], [0.33, 0.05]] {
            assert!((c.eval(p) - f.eval(p)).abs() < 1e-14);
        }
        assert!(TrigPoly::cosine(4, 0, 1.0).coefficients(b).is_err());
    }

    #[test]
    fn grid_matches_pointwise() {
        let b = FourierBasis::new(2);
        let f = TrigPoly {
            terms: vec![TrigTerm { m: 2, n: 1, cos: 1.0, sin: 0.5 }, TrigTerm { m: 0, n: 1, cos: -0.3, sin: 0.0 }],
        };
        let c = f.coefficients(b).unwrap();
        let q = 12;
        let g = c.grid_values(q);
        for j in 0..q {
            for i in 0..q {
                let p = [i as f64 / q as f64, j as f64 / q as f64];
                assert!((g[j * q + i] - f.eval(p)).abs() < 1e-13);
            }
        }
        assert!((TrigPoly::cosine(1, 0, 1.0).coefficients(b).unwrap().sup_norm() - 1.0).abs() < 1e-14);
    }
}

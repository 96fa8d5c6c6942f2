use serde::Serialize;

use crate::error::{param, Result};
use crate::models::Point2;

/// Counts on `B x B` uniform bins of the unit torus; bin `(i, j)` covers
/// `[i/B, (i+1)/B) x [j/B, (j+1)/B)` and is stored at `j B + i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Histogram {
    pub bins: usize,
    pub counts: Vec<u64>,
    pub total: u64,
}

impl Histogram {
    pub fn new(bins: usize) -> Result<Self> {
        if bins == 0 {
            return param("at least one bin per axis is required");
        }
        Ok(Self { bins, counts: vec![0; bins * bins], total: 0 })
    }

    pub fn bin_of(&self, x: Point2) -> usize {
        let b = self.bins;
        let i = ((x[0] * b as f64) as usize).min(b - 1);
        let j = ((x[1] * b as f64) as usize).min(b - 1);
        j * b + i
    }

    /// Adds one canonicalized point.
    pub fn add(&mut self, x: Point2) {
        let k = self.bin_of(x);
        self.counts[k] += 1;
        self.total += 1;
    }

    /// Integer merge; exact and order independent.
    pub fn merge(&mut self, other: &Histogram) {
        debug_assert_eq!(self.bins, other.bins);
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.total += other.total;
    }

    /// `1/2 sum_b |count_b / N - 1/B^2|`. Biased upward by sampling noise,
    /// about [`Histogram::noise_floor`] at equilibrium.
    pub fn tv_to_uniform(&self) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        let u = 1.0 / self.counts.len() as f64;
        let n = self.total as f64;
        0.5 * self.counts.iter().map(|&c| (c as f64 / n - u).abs()).sum::<f64>()
    }

    /// Delta-method standard error of [`Histogram::tv_to_uniform`]:
    /// `1/2 sqrt((1 - S^2)/N)` with `S = sum_b sign(p_b - 1/B^2) p_b`.
    pub fn tv_stderr(&self) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        let u = 1.0 / self.counts.len() as f64;
        let n = self.total as f64;
        let s: f64 = self
            .counts
            .iter()
            .map(|&c| {
                let p = c as f64 / n;
                if p > u {
                    p
                } else if p < u {
                    -p
                } else {
                    0.0
                }
            })
            .sum();
        0.5 * ((1.0 - s * s).max(0.0) / n).sqrt()
    }

    /// Expected TV of a uniform multinomial sample, `1/2 B sqrt(2/(pi N))`.
    pub fn noise_floor(&self) -> f64 {
        noise_floor(self.bins, self.total)
    }
}

pub(crate) fn noise_floor(bins: usize, total: u64) -> f64 {
    0.5 * bins as f64 * (2.0 / (std::f64::consts::PI * total as f64)).sqrt()
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

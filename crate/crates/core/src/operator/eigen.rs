use nalgebra::{DVector, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;

use super::{GalerkinOperator, OperatorKind};
use crate::error::{Error, Result};
use crate::fourier::{FourierBasis, FourierCoeffs};

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: f64,
    /// Position of the owning block in the operator.
    pub block: usize,
    /// Position within the block after sorting the block's eigenvalues.
    pub index: usize,
    /// Unit eigenvector in block coordinates; largest entry positive.
    pub vector: DVector<f64>,
}

/// Merged eigendecomposition of all blocks: descending for transfer
/// operators, ascending for generators, ties kept in (block, index) order.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub kind: OperatorKind,
    pub h: Option<f64>,
    pub basis: FourierBasis,
    pub block_frequencies: Vec<Option<i64>>,
    pub block_modes: Vec<Vec<usize>>,
    pub pairs: Vec<EigenPair>,
}

pub fn eigen(op: &GalerkinOperator) -> Result<Spectrum> {
    for b in &op.blocks {
        let asym = (&b.matrix - b.matrix.transpose()).amax();
        if asym != 0.0 {
            return Err(Error::NotSymmetric(asym));
        }
    }
    let descending = op.kind == OperatorKind::Transfer;
    let per_block: Vec<Vec<EigenPair>> = op
        .blocks
        .par_iter()
        .enumerate()
        .map(|(bi, b)| {
            let se = SymmetricEigen::new(b.matrix.clone());
            let mut order: Vec<usize> = (0..se.eigenvalues.len()).collect();
            order.sort_by(|&i, &j| {
                let c = se.eigenvalues[i].total_cmp(&se.eigenvalues[j]);
                if descending {
                    c.reverse()
                } else {
                    c
                }
            });
            order
                .into_iter()
                .enumerate()
                .map(|(index, i)| {
                    let mut v: DVector<f64> = se.eigenvectors.column(i).into_owned();
                    let lead = v.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
                    if lead < 0.0 {
                        v.neg_mut();
                    }
                    EigenPair { value: se.eigenvalues[i], block: bi, index, vector: v }
                })
                .collect()
        })
        .collect();
    let mut pairs: Vec<EigenPair> = per_block.into_iter().flatten().collect();
    pairs.sort_by(|a, b| {
        let c = a.value.total_cmp(&b.value);
        if descending {
            c.reverse()
        } else {
            c
        }
    });
    Ok(Spectrum {
        kind: op.kind,
        h: op.h,
        basis: op.basis,
        block_frequencies: op.blocks.iter().map(|b| b.frequency).collect(),
        block_modes: op.blocks.iter().map(|b| b.modes.clone()).collect(),
        pairs,
    })
}

impl Spectrum {
    pub fn values(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.value).collect()
    }

    /// `(1 - value) / h^2` for each pair, in spectrum order.
    pub fn rescaled(&self) -> Result<Vec<f64>> {
        let h = self.h.ok_or(Error::WrongKind { expected: "transfer" })?;
        Ok(self.pairs.iter().map(|p| (1.0 - p.value) / (h * h)).collect())
    }

    /// Eigenfunction `sum_j v_j e_{mode_j}` as a coefficient vector.
    pub fn coefficients(&self, pair: &EigenPair) -> FourierCoeffs {
        let mut c = FourierCoeffs::zeros(self.basis);
        for (&i, &v) in self.block_modes[pair.block].iter().zip(pair.vector.iter()) {
            c.data[i] = Complex64::new(v, 0.0);
        }
        c
    }

    /// A real eigenfunction with unit `L^2` norm: the real or imaginary part of
    /// the complex eigenfunction, whichever is larger, renormalized.
    ///
    /// Blocks `n` and `-n` carry conjugate eigenfunctions, so this is again
    /// in the eigenspace whenever the operator commutes with conjugation.
    pub fn real_eigenfunction(&self, pair: &EigenPair) -> FourierCoeffs {
        let c = self.coefficients(pair);
        let basis = self.basis;
        let part = |imaginary: bool| {
            let mut out = FourierCoeffs::zeros(basis);
            for (i, z) in c.data.iter().enumerate() {
                let (m, n) = basis.mode(i);
                let w = c.get(-m, -n).conj();
                out.data[i] += if imaginary { (z - w) / Complex64::new(0.0, 2.0) } else { (z + w) * 0.5 };
            }
            out
        };
        let (re, im) = (part(false), part(true));
        let mut best = if re.l2_norm() >= im.l2_norm() { re } else { im };
        let norm = best.l2_norm();
        for z in &mut best.data {
            *z /= norm;
        }
        best
    }

    /// `phi(A) c = sum_j phi(lambda_j) <v_j, c> v_j`, block by block.
    pub fn apply_function(&self, phi: impl Fn(f64) -> f64, c: &FourierCoeffs) -> Result<FourierCoeffs> {
        if c.basis != self.basis {
            return Err(Error::DimensionMismatch { expected: self.basis.dim(), found: c.basis.dim() });
        }
        let mut covered = vec![false; self.basis.dim()];
        for modes in &self.block_modes {
            for &i in modes {
                covered[i] = true;
            }
        }
        if c.data.iter().zip(&covered).any(|(z, &ok)| !ok && z.norm_sqr() > 0.0) {
            return Err(Error::Parameter("coefficients outside the decomposed blocks".into()));
        }
        let mut out = FourierCoeffs::zeros(self.basis);
        for p in &self.pairs {
            let w = phi(p.value);
            if w == 0.0 {
                continue;
            }
            let modes = &self.block_modes[p.block];
            let proj: Complex64 = modes.iter().zip(p.vector.iter()).map(|(&i, &v)| c.data[i] * v).sum();
            for (&i, &v) in modes.iter().zip(p.vector.iter()) {
                out.data[i] += proj * (w * v);
            }
        }
        Ok(out)
    }

    /// `max ||A v - lambda v||_inf / ||A||_max` over all pairs.
    pub fn max_residual(&self, op: &GalerkinOperator) -> f64 {
        self.pairs
            .iter()
            .map(|p| {
                let a = &op.blocks[p.block].matrix;
                let r = a * &p.vector - &p.vector * p.value;
                r.amax() / a.amax().max(f64::MIN_POSITIVE)
            })
            .fold(0.0, f64::max)
    }
}

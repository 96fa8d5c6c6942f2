//! Fourier-Galerkin matrices of the averaged-flow operator `T_h` and of the
//! generator `L = -(1/6p) sum_k X_k^2` on the torus models.
//!
//! Torus models commute with `y`-translations, so both operators split into
//! one real symmetric block of size `2M + 1` per `y`-frequency `n`.

mod assembly;
mod eigen;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{param, Error, Result};
use crate::fourier::{FourierBasis, FourierCoeffs};
use crate::models::Model;

pub use eigen::{eigen, EigenPair, Spectrum};

pub const MIN_CUTOFF: usize = 2;
pub const MIN_QUADRATURE: usize = 8;
pub const DEFAULT_QUADRATURE: usize = 16;
/// Spatial samples per mode used to project onto the basis.
pub const OVERSAMPLING: usize = 4;
/// Largest cutoff accepted for dense (unblocked) assembly.
pub const MAX_DENSE_CUTOFF: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    Transfer,
    Generator,
}

/// Which part of the mode lattice to assemble.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum Layout {
    /// One block per `y`-frequency `-M..=M`.
    #[default]
    Blocks,
    /// Only the listed `y`-frequencies.
    Frequencies(Vec<i64>),
    /// A single block over all `(2M+1)^2` modes, with no use of `y`-invariance.
    Dense,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssemblyOptions {
    /// Gauss-Legendre nodes per panel of the time average.
    pub quadrature: usize,
    pub layout: Layout,
    /// Restrict to one field: `T_{k,h}` for the transfer operator,
    /// `-(1/6p) X_k^2` for the generator.
    pub field: Option<usize>,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        Self { quadrature: DEFAULT_QUADRATURE, layout: Layout::Blocks, field: None }
    }
}

#[derive(Debug, Clone)]
pub struct Block {
    /// `y`-frequency of the block; `None` for a dense block.
    pub frequency: Option<i64>,
    /// Flat basis indices of the rows, in block order.
    pub modes: Vec<usize>,
    pub matrix: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct GalerkinOperator {
    pub kind: OperatorKind,
    /// Step scale; `None` for the generator.
    pub h: Option<f64>,
    pub model: Model,
    pub basis: FourierBasis,
    pub blocks: Vec<Block>,
    /// `max |A - A^T|` before symmetrization.
    pub raw_asymmetry: f64,
    /// Largest discarded imaginary part of an entry.
    pub raw_imaginary: f64,
}

pub fn assemble_transfer(model: Model, h: f64, cutoff: usize, quadrature: usize) -> Result<GalerkinOperator> {
    let opts = AssemblyOptions { quadrature, ..Default::default() };
    assemble_transfer_with(model, h, cutoff, &opts)
}

pub fn assemble_transfer_with(model: Model, h: f64, cutoff: usize, opts: &AssemblyOptions) -> Result<GalerkinOperator> {
    if !(h > 0.0 && h <= 0.5) {
        return param(format!("step h = {h} outside (0, 0.5]"));
    }
    if opts.quadrature < MIN_QUADRATURE {
        return param(format!("quadrature order {} below {MIN_QUADRATURE}", opts.quadrature));
    }
    check_common(model, cutoff, opts)?;
    assembly::build(model, OperatorKind::Transfer, Some(h), FourierBasis::new(cutoff), opts)
}

pub fn assemble_generator(model: Model, cutoff: usize) -> Result<GalerkinOperator> {
    assemble_generator_with(model, cutoff, &AssemblyOptions::default())
}

pub fn assemble_generator_with(model: Model, cutoff: usize, opts: &AssemblyOptions) -> Result<GalerkinOperator> {
    check_common(model, cutoff, opts)?;
    assembly::build(model, OperatorKind::Generator, None, FourierBasis::new(cutoff), opts)
}

fn check_common(model: Model, cutoff: usize, opts: &AssemblyOptions) -> Result<()> {
    if !model.on_torus() {
        return Err(Error::Unsupported(format!("{model} is not a torus model")));
    }
    if cutoff < MIN_CUTOFF {
        return param(format!("cutoff M = {cutoff} below {MIN_CUTOFF}"));
    }
    if let Some(k) = opts.field.filter(|&k| k >= model.fields()) {
        return param(format!("field index {k} out of range for {model}"));
    }
    match &opts.layout {
        Layout::Dense if cutoff > MAX_DENSE_CUTOFF => {
            Err(Error::Resource(format!("dense assembly is limited to M <= {MAX_DENSE_CUTOFF}")))
        }
        Layout::Frequencies(ns) if ns.is_empty() || ns.iter().any(|n| n.unsigned_abs() as usize > cutoff) => {
            param("block frequencies must be nonempty and within the cutoff")
        }
        _ => Ok(()),
    }
}

impl GalerkinOperator {
    pub fn is_transfer(&self) -> bool {
        self.kind == OperatorKind::Transfer
    }

    /// Scale used to rescale eigenvalues, `h` for transfer operators.
    pub fn step(&self) -> Result<f64> {
        self.h.ok_or(Error::WrongKind { expected: "transfer" })
    }

    pub fn block_for(&self, n: i64) -> Option<&Block> {
        self.blocks.iter().find(|b| b.frequency == Some(n))
    }

    /// `max |A - A^T|` over blocks after symmetrization.
    pub fn symmetry_residual(&self) -> f64 {
        self.blocks.iter().map(|b| (&b.matrix - b.matrix.transpose()).amax()).fold(0.0, f64::max)
    }

    /// One application to a coefficient vector.
    pub fn apply(&self, c: &FourierCoeffs) -> Result<FourierCoeffs> {
        self.apply_power(1, c)
    }

    /// `A^n c` by repeated block products.
    pub fn apply_power(&self, n: usize, c: &FourierCoeffs) -> Result<FourierCoeffs> {
        if c.basis != self.basis {
            return Err(Error::DimensionMismatch { expected: self.basis.dim(), found: c.basis.dim() });
        }
        let mut covered = vec![false; self.basis.dim()];
        let mut out = FourierCoeffs::zeros(self.basis);
        for block in &self.blocks {
            let mut re = DVector::from_iterator(block.modes.len(), block.modes.iter().map(|&i| c.data[i].re));
            let mut im = DVector::from_iterator(block.modes.len(), block.modes.iter().map(|&i| c.data[i].im));
            for _ in 0..n {
                re = &block.matrix * re;
                im = &block.matrix * im;
            }
            for (j, &i) in block.modes.iter().enumerate() {
                out.data[i] = num_complex::Complex64::new(re[j], im[j]);
                covered[i] = true;
            }
        }
        if c.data.iter().zip(&covered).any(|(z, &ok)| !ok && z.norm_sqr() > 0.0) {
            return param("coefficients outside the assembled blocks");
        }
        Ok(out)
    }
}

/// Sanity report for a transfer operator.
#[derive(Debug, Clone, Serialize)]
pub struct MarkovReport {
    pub constant_fixed: bool,
    pub raw_asymmetry: f64,
    pub symmetry_residual: f64,
    pub max_abs_eigenvalue: f64,
    pub min_eigenvalue: f64,
    pub second_eigenvalue: f64,
    pub top_simple: bool,
}

impl MarkovReport {
    pub fn passed(&self) -> bool {
        self.constant_fixed && self.symmetry_residual == 0.0 && self.max_abs_eigenvalue <= 1.0 + 1e-8 && self.top_simple
    }
}

pub fn markov_checks(op: &GalerkinOperator) -> Result<MarkovReport> {
    if !op.is_transfer() {
        return Err(Error::WrongKind { expected: "transfer" });
    }
    let constant_fixed = match op.basis.index(0, 0) {
        Some(i0) => op.blocks.iter().any(|b| {
            b.modes.iter().position(|&i| i == i0).is_some_and(|j| {
                b.matrix.column(j).iter().enumerate().all(|(r, &v)| v == if r == j { 1.0 } else { 0.0 })
            })
        }),
        None => false,
    };
    let spec = eigen(op)?;
    let values: Vec<f64> = spec.pairs.iter().map(|p| p.value).collect();
    let second = values.get(1).copied().unwrap_or(f64::NEG_INFINITY);
    Ok(MarkovReport {
        constant_fixed,
        raw_asymmetry: op.raw_asymmetry,
        symmetry_residual: op.symmetry_residual(),
        max_abs_eigenvalue: values.iter().fold(0.0, |m, v| m.max(v.abs())),
        min_eigenvalue: values.iter().copied().fold(f64::INFINITY, f64::min),
        second_eigenvalue: second,
        top_simple: (values[0] - 1.0).abs() <= 1e-10 && second < 1.0 - 1e-10,
    })
}

/// Exact transfer multiplier of the flat model on mode `(m, n)`.
pub fn flat_multiplier(m: i64, n: i64, h: f64) -> f64 {
    0.5 * (sinc(std::f64::consts::TAU * m as f64 * h) + sinc(std::f64::consts::TAU * n as f64 * h))
}

/// `sin(x) / x` with the removable singularity filled.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::TrigPoly;

    #[test]
    fn sinc_is_continuous_at_switch() {
        for x in [0.99e-4, 1.01e-4] {
            assert!((sinc(x) - x.sin() / x).abs() <= 2.0 * f64::EPSILON);
        }
        assert_eq!(sinc(0.0), 1.0);
    }

    #[test]
    fn flat_mode_multiplier_example() {
        assert!((flat_multiplier(1, 0, 0.1) - 0.967_744_6).abs() < 1e-7);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(assemble_transfer(Model::Flat2, 0.0, 4, 16).is_err());
        assert!(assemble_transfer(Model::Flat2, 0.6, 4, 16).is_err());
        assert!(assemble_transfer(Model::Flat2, 0.1, 1, 16).is_err());
        assert!(assemble_transfer(Model::Flat2, 0.1, 4, 7).is_err());
        assert!(assemble_transfer(Model::HeisLift, 0.1, 4, 16).is_err());
        assert!(assemble_generator(Model::Flat2, 1).is_err());
        let dense = AssemblyOptions { layout: Layout::Dense, ..Default::default() };
        assert!(assemble_transfer_with(Model::Flat2, 0.1, 9, &dense).is_err());
    }

    #[test]
    fn powers_of_flat_transfer() {
        let op = assemble_transfer(Model::Flat2, 0.1, 4, 16).unwrap();
        let f = TrigPoly::cosine(1, 0, 1.0).coefficients(op.basis).unwrap();
        assert_eq!(op.apply_power(0, &f).unwrap(), f);
        let g = op.apply_power(10, &f).unwrap();
        assert!((g.eval([0.0, 0.0]) - flat_multiplier(1, 0, 0.1).powi(10)).abs() < 1e-12);
        assert!((g.eval([0.0, 0.0]) - 0.720_456_484_2).abs() < 1e-9);
        let one = TrigPoly::constant(1.0).coefficients(op.basis).unwrap();
        assert_eq!(op.apply_power(25, &one).unwrap(), one);
    }

    #[test]
    fn generator_rejected_by_markov_checks() {
        let op = assemble_generator(Model::Flat2, 3).unwrap();
        assert!(matches!(markov_checks(&op), Err(Error::WrongKind { .. })));
    }
}

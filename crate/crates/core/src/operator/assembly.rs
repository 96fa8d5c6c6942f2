use std::f64::consts::{PI, TAU};
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use super::{AssemblyOptions, Block, GalerkinOperator, Layout, OperatorKind, OVERSAMPLING};
use crate::error::{Error, Result};
use crate::fourier::{fft2, FourierBasis};
use crate::models::Model;

/// Entries whose imaginary part exceeds this are not treated as rounding.
const IMAGINARY_LIMIT: f64 = 1e-8;
/// Deviation of the constant column tolerated before it is pinned to `e_0`.
const CONSTANT_LIMIT: f64 = 1e-12;

pub(super) fn build(
    model: Model,
    kind: OperatorKind,
    h: Option<f64>,
    basis: FourierBasis,
    opts: &AssemblyOptions,
) -> Result<GalerkinOperator> {
    let c = basis.cutoff as i64;
    let raw: Vec<(Option<i64>, DMatrix<Complex64>)> = match &opts.layout {
        Layout::Dense => {
            let m = match kind {
                OperatorKind::Transfer => dense_transfer(model, h.unwrap(), basis, opts)?,
                OperatorKind::Generator => dense_generator(model, basis, opts),
            };
            vec![(None, m)]
        }
        layout => {
            let ns: Vec<i64> = match layout {
                Layout::Frequencies(ns) => ns.clone(),
                _ => (-c..=c).collect(),
            };
            ns.into_par_iter()
                .map(|n| {
                    let m = match kind {
                        OperatorKind::Transfer => block_transfer(model, h.unwrap(), basis, n, opts)?,
                        OperatorKind::Generator => block_generator(model, basis, n, opts),
                    };
                    Ok((Some(n), m))
                })
                .collect::<Result<_>>()?
        }
    };

    let mut raw_asymmetry = 0.0f64;
    let mut raw_imaginary = 0.0f64;
    let mut blocks = Vec::with_capacity(raw.len());
    for (frequency, m) in raw {
        raw_imaginary = raw_imaginary.max(m.iter().fold(0.0, |a, z| a.max(z.im.abs())));
        let re = m.map(|z| z.re);
        raw_asymmetry = raw_asymmetry.max((&re - re.transpose()).amax());
        let mut matrix = (&re + re.transpose()) * 0.5;
        let modes: Vec<usize> = match frequency {
            Some(n) => basis.frequencies().map(|mx| basis.index(mx, n).unwrap()).collect(),
            None => (0..basis.dim()).collect(),
        };
        if kind == OperatorKind::Transfer {
            if let Some(j) = modes.iter().position(|&i| i == basis.index(0, 0).unwrap()) {
                pin_constant(&mut matrix, j)?;
            }
        }
        blocks.push(Block { frequency, modes, matrix });
    }
    if raw_imaginary > IMAGINARY_LIMIT {
        return Err(Error::Unsupported(format!(
            "{model} produced complex Galerkin blocks (imaginary part {raw_imaginary:.3e})"
        )));
    }
    Ok(GalerkinOperator { kind, h, model, basis, blocks, raw_asymmetry, raw_imaginary })
}

/// `T_h 1 = 1` holds exactly; quadrature reproduces it to rounding.
fn pin_constant(m: &mut DMatrix<f64>, j: usize) -> Result<()> {
    let dev = (0..m.nrows()).map(|r| (m[(r, j)] - if r == j { 1.0 } else { 0.0 }).abs()).fold(0.0, f64::max);
    if dev > CONSTANT_LIMIT {
        return Err(Error::Parameter(format!("constant mode not preserved (deviation {dev:.3e})")));
    }
    m.column_mut(j).fill(0.0);
    m.row_mut(j).fill(0.0);
    m[(j, j)] = 1.0;
    Ok(())
}

/// Composite Gauss-Legendre rule for the average over `s in [-1, 1]`;
/// weights sum to one.
pub(crate) fn averaging_rule(q: usize, panels: usize) -> Vec<(f64, f64)> {
    let gl = GaussLegendre::new(NonZeroUsize::new(q).expect("q >= 1"));
    let mut out = Vec::with_capacity(q * panels);
    let half = 1.0 / panels as f64;
    for p in 0..panels {
        let center = -1.0 + (2 * p + 1) as f64 * half;
        for &(x, w) in gl.as_node_weight_pairs() {
            out.push((center + half * x, 0.5 * half * w));
        }
    }
    out
}

/// Panels so that each resolves at most half a period of `e^{i omega t}`
/// over `t in [-h, h]`.
fn panel_count(omega: f64, h: f64) -> usize {
    ((omega * 2.0 * h / PI).ceil() as usize).max(1)
}

/// Fields summed by the assembly: one if restricted, all otherwise.
fn field_range(model: Model, opts: &AssemblyOptions) -> std::ops::Range<usize> {
    match opts.field {
        Some(k) => k..k + 1,
        None => 0..model.fields(),
    }
}

fn cis(theta: f64) -> Complex64 {
    Complex64::from_polar(1.0, theta)
}

/// Block `n` of `T_h`: column `m` is the projection of the time average of
/// `e^{2 pi i (m F + n G)}` where the flow sends `(x, 0)` to `(F, G)`.
fn block_transfer(
    model: Model,
    h: f64,
    basis: FourierBasis,
    n: i64,
    opts: &AssemblyOptions,
) -> Result<DMatrix<Complex64>> {
    let side = basis.side();
    let cutoff = basis.cutoff as f64;
    let qx = OVERSAMPLING * side;
    let q = opts.quadrature;
    let fields = field_range(model, opts);
    let p = fields.len();
    let plan = FftPlanner::new().plan_fft_forward(qx);
    let mut out = DMatrix::<Complex64>::zeros(side, side);
    for k in fields.clone() {
        let (sx, sy) = model.speed_bounds(k)?;
        let rule = averaging_rule(q, panel_count(TAU * (cutoff * sx + n.abs() as f64 * sy), h));
        // samples[col * qx + i]
        let mut samples = vec![Complex64::new(0.0, 0.0); side * qx];
        for i in 0..qx {
            let x = i as f64 / qx as f64;
            for &(s, w) in &rule {
                let f = model.flow_lifted(k, h * s, [x, 0.0]);
                let step = cis(TAU * f[0]);
                let mut z = cis(TAU * (-cutoff * f[0] + n as f64 * f[1])) * w;
                for col in 0..side {
                    samples[col * qx + i] += z;
                    z *= step;
                }
            }
        }
        for (col, chunk) in samples.chunks_mut(qx).enumerate() {
            plan.process(chunk);
            for (row, mr) in basis.frequencies().enumerate() {
                out[(row, col)] += chunk[mr.rem_euclid(qx as i64) as usize] / (qx * p) as f64;
            }
        }
    }
    Ok(out)
}

fn dense_transfer(model: Model, h: f64, basis: FourierBasis, opts: &AssemblyOptions) -> Result<DMatrix<Complex64>> {
    let side = basis.side();
    let dim = basis.dim();
    let cutoff = basis.cutoff as f64;
    let qx = OVERSAMPLING * side;
    let q = opts.quadrature;
    let fields = field_range(model, opts);
    let p = fields.len();
    let plan = FftPlanner::new().plan_fft_forward(qx);
    let mut out = DMatrix::<Complex64>::zeros(dim, dim);
    for k in fields.clone() {
        let (sx, sy) = model.speed_bounds(k)?;
        let rule = averaging_rule(q, panel_count(TAU * cutoff * (sx + sy), h));
        // samples[col * qx^2 + j * qx + i] for the grid point (i/qx, j/qx)
        let mut samples = vec![Complex64::new(0.0, 0.0); dim * qx * qx];
        for j in 0..qx {
            for i in 0..qx {
                let pt = [i as f64 / qx as f64, j as f64 / qx as f64];
                let at = j * qx + i;
                for &(s, w) in &rule {
                    let f = model.flow_lifted(k, h * s, pt);
                    let (sm, sn) = (cis(TAU * f[0]), cis(TAU * f[1]));
                    let mut zn = cis(-TAU * cutoff * (f[0] + f[1])) * w;
                    for nn in 0..side {
                        let mut z = zn;
                        for mm in 0..side {
                            samples[(nn * side + mm) * qx * qx + at] += z;
                            z *= sm;
                        }
                        zn *= sn;
                    }
                }
            }
        }
        let scale = 1.0 / ((qx * qx * p) as f64);
        for (col, grid) in samples.chunks_mut(qx * qx).enumerate() {
            fft2(grid, qx, &plan);
            for (row, entry) in out.column_mut(col).iter_mut().enumerate() {
                let (m, n) = basis.mode(row);
                let g = grid[n.rem_euclid(qx as i64) as usize * qx + m.rem_euclid(qx as i64) as usize];
                *entry += g * scale;
            }
        }
    }
    Ok(out)
}

/// Fourier coefficients of `a_k^2`, `a_k b_k`, `b_k^2` on a grid of `qx`
/// points, indexed by frequency modulo `qx`.
fn coefficient_products(model: Model, k: usize, qx: usize) -> [Vec<Complex64>; 3] {
    let plan = FftPlanner::new().plan_fft_forward(qx);
    let mut prods =
        [vec![Complex64::new(0.0, 0.0); qx], vec![Complex64::new(0.0, 0.0); qx], vec![Complex64::new(0.0, 0.0); qx]];
    for i in 0..qx {
        let (a, b) = model.coefficients(k, i as f64 / qx as f64);
        prods[0][i] = Complex64::new(a * a / qx as f64, 0.0);
        prods[1][i] = Complex64::new(a * b / qx as f64, 0.0);
        prods[2][i] = Complex64::new(b * b / qx as f64, 0.0);
    }
    for v in &mut prods {
        plan.process(v);
    }
    prods
}

/// Block `n` of `L` from the quadratic form `(1/6p) sum_k (X_k e_{m'n} | X_k e_{mn})`.
fn block_generator(model: Model, basis: FourierBasis, n: i64, opts: &AssemblyOptions) -> DMatrix<Complex64> {
    let side = basis.side();
    let qx = OVERSAMPLING * side;
    let p = model.fields();
    let scale = 4.0 * PI * PI / (6.0 * p as f64);
    let nf = n as f64;
    let mut out = DMatrix::<Complex64>::zeros(side, side);
    for k in field_range(model, opts) {
        let [aa, ab, bb] = coefficient_products(model, k, qx);
        for (row, mr) in basis.frequencies().enumerate() {
            for (col, mc) in basis.frequencies().enumerate() {
                let d = (mr - mc).rem_euclid(qx as i64) as usize;
                let (fr, fc) = (mr as f64, mc as f64);
                out[(row, col)] += (aa[d] * (fr * fc) + ab[d] * (nf * (fr + fc)) + bb[d] * (nf * nf)) * scale;
            }
        }
    }
    out
}

fn dense_generator(model: Model, basis: FourierBasis, opts: &AssemblyOptions) -> DMatrix<Complex64> {
    let side = basis.side();
    let dim = basis.dim();
    let qx = OVERSAMPLING * side;
    let p = model.fields();
    let scale = 4.0 * PI * PI / (6.0 * p as f64);
    let plan = FftPlanner::new().plan_fft_forward(qx);
    let mut out = DMatrix::<Complex64>::zeros(dim, dim);
    for k in field_range(model, opts) {
        let mut prods = [
            vec![Complex64::new(0.0, 0.0); qx * qx],
            vec![Complex64::new(0.0, 0.0); qx * qx],
            vec![Complex64::new(0.0, 0.0); qx * qx],
        ];
        let norm = (qx * qx) as f64;
        for j in 0..qx {
            for i in 0..qx {
                let v = model.field(k, [i as f64 / qx as f64, j as f64 / qx as f64]).unwrap();
                prods[0][j * qx + i] = Complex64::new(v[0] * v[0] / norm, 0.0);
                prods[1][j * qx + i] = Complex64::new(v[0] * v[1] / norm, 0.0);
                prods[2][j * qx + i] = Complex64::new(v[1] * v[1] / norm, 0.0);
            }
        }
        for g in &mut prods {
            fft2(g, qx, &plan);
        }
        for row in 0..dim {
            let (mr, nr) = basis.mode(row);
            for col in 0..dim {
                let (mc, nc) = basis.mode(col);
                let at = (nr - nc).rem_euclid(qx as i64) as usize * qx + (mr - mc).rem_euclid(qx as i64) as usize;
                let (mr, nr, mc, nc) = (mr as f64, nr as f64, mc as f64, nc as f64);
                out[(row, col)] +=
                    (prods[0][at] * (mr * mc) + prods[1][at] * (mr * nc + nr * mc) + prods[2][at] * (nr * nc)) * scale;
            }
        }
    }
    out
}

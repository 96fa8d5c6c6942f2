use rayon::prelude::*;
use serde::Serialize;

use super::{check_step, next_draw, walker_stream, Histogram};
use crate::error::{param, Error, Result};
use crate::fourier::{FourierCoeffs, TrigPoly};
use crate::models::{Model, Point2};
use crate::operator::{
    assemble_generator_with, assemble_transfer_with, eigen, AssemblyOptions, GalerkinOperator, Layout,
};
use crate::spectra::{spectral_gap, steps_within, y_frequencies};

pub const MIN_WALKERS: usize = 10_000;
/// Walkers per work unit; chunk boundaries are fixed so float reductions
/// are summed in the same order on any pool.
pub const CHUNK: usize = 4096;
/// Bound on `checkpoints * B^2` count cells held per worker.
pub const MAX_HISTOGRAM_CELLS: usize = 1 << 26;

fn check_walk(model: Model, h: f64, n_walkers: usize) -> Result<()> {
    check_step(h)?;
    if !model.on_torus() {
        return Err(Error::Unsupported(format!("{model} has no compact fundamental domain")));
    }
    if n_walkers < MIN_WALKERS {
        return param(format!("ensemble of {n_walkers} walkers below {MIN_WALKERS}"));
    }
    Ok(())
}

fn chunks(n_walkers: usize) -> impl IndexedParallelIterator<Item = std::ops::Range<usize>> {
    (0..n_walkers.div_ceil(CHUNK)).into_par_iter().map(move |c| c * CHUNK..((c + 1) * CHUNK).min(n_walkers))
}

/// Histograms of the walker positions after each checkpoint step count.
pub fn run_ensemble(
    model: Model,
    h: f64,
    checkpoints: &[usize],
    n_walkers: usize,
    x0: Point2,
    seed: u64,
    bins: usize,
) -> Result<Vec<(usize, Histogram)>> {
    check_walk(model, h, n_walkers)?;
    if checkpoints.is_empty() || checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return param("checkpoints must be nonempty and strictly increasing");
    }
    if bins == 0 || checkpoints.len().saturating_mul(bins.saturating_mul(bins)) > MAX_HISTOGRAM_CELLS {
        return Err(Error::Resource(format!(
            "{} checkpoints of {bins}x{bins} bins exceed {MAX_HISTOGRAM_CELLS} cells",
            checkpoints.len()
        )));
    }
    let x0 = model.canonicalize(x0);
    let empty = || vec![Histogram::new(bins).unwrap(); checkpoints.len()];
    let merged = chunks(n_walkers)
        .map(|range| {
            let mut hists = empty();
            for w in range {
                let mut rng = walker_stream(seed, w as u64);
                let mut x = x0;
                let mut n = 0;
                for (c, &target) in checkpoints.iter().enumerate() {
                    while n < target {
                        let d = next_draw(&mut rng, model.fields());
                        x = model.flow_unchecked(d.field, h * d.s, x);
                        n += 1;
                    }
                    hists[c].add(x);
                }
            }
            hists
        })
        .reduce(empty, |mut a, b| {
            for (x, y) in a.iter_mut().zip(&b) {
                x.merge(y);
            }
            a
        });
    Ok(checkpoints.iter().copied().zip(merged).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnsembleMean {
    pub mean: f64,
    pub stderr: f64,
}

/// `(1/N) sum_w f(x^w_n)` for each test function, with standard errors.
pub fn ensemble_mean(
    model: Model,
    h: f64,
    n_steps: usize,
    fs: &[TrigPoly],
    n_walkers: usize,
    x0: Point2,
    seed: u64,
) -> Result<Vec<EnsembleMean>> {
    check_walk(model, h, n_walkers)?;
    let x0 = model.canonicalize(x0);
    let partial: Vec<Vec<(f64, f64)>> = chunks(n_walkers)
        .map(|range| {
            let mut acc = vec![(0.0, 0.0); fs.len()];
            for w in range {
                let mut rng = walker_stream(seed, w as u64);
                let mut x = x0;
                for _ in 0..n_steps {
                    let d = next_draw(&mut rng, model.fields());
                    x = model.flow_unchecked(d.field, h * d.s, x);
                }
                for (a, f) in acc.iter_mut().zip(fs) {
                    let v = f.eval(x);
                    a.0 += v;
                    a.1 += v * v;
                }
            }
            acc
        })
        .collect();
    let n = n_walkers as f64;
    Ok((0..fs.len())
        .map(|i| {
            let (s, s2) = partial.iter().fold((0.0, 0.0), |acc, p| (acc.0 + p[i].0, acc.1 + p[i].1));
            let mean = s / n;
            let var = ((s2 / n - mean * mean) * n / (n - 1.0)).max(0.0);
            EnsembleMean { mean, stderr: (var / n).sqrt() }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TvRow {
    pub n: usize,
    pub tv: f64,
    pub stderr: f64,
    pub floor: f64,
}

impl TvRow {
    pub fn from_histogram(n: usize, hist: &Histogram) -> Self {
        Self { n, tv: hist.tv_to_uniform(), stderr: hist.tv_stderr(), floor: hist.noise_floor() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TvFit {
    /// `-d/dn log sqrt(TV^2 - floor^2)` over the window.
    pub rate: f64,
    pub intercept: f64,
    /// Checkpoints inside `[FLOOR_FACTOR floor, TV_CEILING]`.
    pub window: Vec<usize>,
    /// Window checkpoints where TV rose by more than 3 standard errors.
    pub envelope_violations: Vec<usize>,
}

pub const FLOOR_FACTOR: f64 = 3.0;
pub const TV_CEILING: f64 = 0.3;

/// Noise-corrected exponential fit of TV decay.
///
/// Sampling noise adds roughly in quadrature to the true TV, so the fit uses
/// `sqrt(TV^2 - floor^2)`.
pub fn tv_decay_fit(rows: &[TvRow]) -> Result<TvFit> {
    let inside: Vec<&TvRow> = rows.iter().filter(|r| r.tv >= FLOOR_FACTOR * r.floor && r.tv <= TV_CEILING).collect();
    if inside.len() < 3 {
        return Err(Error::EmptyWindow(format!(
            "{} checkpoints with TV in [{FLOOR_FACTOR} floor, {TV_CEILING}]",
            inside.len()
        )));
    }
    let pts: Vec<(f64, f64)> =
        inside.iter().map(|r| (r.n as f64, 0.5 * (r.tv * r.tv - r.floor * r.floor).ln())).collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let slope =
        pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    let envelope_violations = inside
        .windows(2)
        .filter(|w| w[1].tv > w[0].tv + 3.0 * w[0].stderr.hypot(w[1].stderr))
        .map(|w| w[1].n)
        .collect();
    Ok(TvFit {
        rate: -slope,
        intercept: my - slope * mx,
        window: inside.iter().map(|r| r.n).collect(),
        envelope_violations,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TvDecayReport {
    pub rows: Vec<TvRow>,
    pub fit: TvFit,
    pub gap: f64,
    /// `rate / g(h)`.
    pub ratio: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn tv_decay_rate(
    model: Model,
    h: f64,
    checkpoints: &[usize],
    n_walkers: usize,
    x0: Point2,
    seed: u64,
    bins: usize,
    cutoff: usize,
    quadrature: usize,
) -> Result<TvDecayReport> {
    let opts = AssemblyOptions { quadrature, layout: Layout::Blocks, field: None };
    let gap = spectral_gap(&eigen(&assemble_transfer_with(model, h, cutoff, &opts)?)?.values())?;
    let rows: Vec<TvRow> = run_ensemble(model, h, checkpoints, n_walkers, x0, seed, bins)?
        .iter()
        .map(|(n, hist)| TvRow::from_histogram(*n, hist))
        .collect();
    let fit = tv_decay_fit(&rows)?;
    let ratio = fit.rate / gap;
    Ok(TvDecayReport { rows, fit, gap, ratio })
}

/// `(log ||T^hi f|| - log ||T^lo f||) / (hi - lo)`; tends to `log(1 - g)`
/// when `f` has a component on the second eigenspace.
pub fn matrix_decay_slope(op: &GalerkinOperator, f: &FourierCoeffs, lo: usize, hi: usize) -> Result<f64> {
    if lo >= hi {
        return param("need lo < hi");
    }
    let a = op.apply_power(lo, f)?;
    let b = op.apply_power(hi - lo, &a)?;
    Ok((b.l2_norm().ln() - a.l2_norm().ln()) / (hi - lo) as f64)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DiffusionReport {
    pub h: f64,
    pub t: f64,
    pub n_steps: usize,
    pub mc_mean: f64,
    pub mc_stderr: f64,
    /// `T_h^n f (x0)`.
    pub matrix_value: f64,
    /// `e^{-tL} f (x0)`.
    pub semigroup_value: f64,
    /// `(mc_mean - matrix_value) / mc_stderr`, zero for a deterministic mean.
    pub z: f64,
}

/// Compares the walk after `n(t, h)` steps with the Galerkin transfer power
/// and with the heat semigroup of the generator, all at `x0`.
#[allow(clippy::too_many_arguments)]
pub fn diffusion_limit_test(
    model: Model,
    h: f64,
    t: f64,
    f: &TrigPoly,
    x0: Point2,
    n_walkers: usize,
    seed: u64,
    cutoff: usize,
    quadrature: usize,
) -> Result<DiffusionReport> {
    if !(t > 0.0) {
        return param("time t must be positive");
    }
    let n_steps = steps_within(t, h);
    let (matrix_value, semigroup_value) = deterministic_values(model, h, t, n_steps, f, x0, cutoff, quadrature)?;
    let mc = ensemble_mean(model, h, n_steps, std::slice::from_ref(f), n_walkers, x0, seed)?[0];
    let z = if mc.stderr > 0.0 { (mc.mean - matrix_value) / mc.stderr } else { 0.0 };
    Ok(DiffusionReport { h, t, n_steps, mc_mean: mc.mean, mc_stderr: mc.stderr, matrix_value, semigroup_value, z })
}

/// `(T_h^n f(x0), e^{-tL} f(x0))` on the blocks touched by `f`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn deterministic_values(
    model: Model,
    h: f64,
    t: f64,
    n_steps: usize,
    f: &TrigPoly,
    x0: Point2,
    cutoff: usize,
    quadrature: usize,
) -> Result<(f64, f64)> {
    let opts = AssemblyOptions { quadrature, layout: Layout::Frequencies(y_frequencies(f)), field: None };
    let op_t = assemble_transfer_with(model, h, cutoff, &opts)?;
    let coeffs = f.coefficients(op_t.basis)?;
    let matrix_value = op_t.apply_power(n_steps, &coeffs)?.eval(x0);
    // the constant mode is an exact eigenvector of both operators
    let i0 = op_t.basis.index(0, 0).unwrap();
    let mut rest = coeffs.clone();
    let c0 = std::mem::take(&mut rest.data[i0]);
    let spec_l = eigen(&assemble_generator_with(model, cutoff, &opts)?)?;
    let semigroup_value = c0.re + spec_l.apply_function(|v| (-t * v).exp(), &rest)?.eval(x0);
    Ok((matrix_value, semigroup_value))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_steps_is_point_mass() {
        let hs = run_ensemble(Model::Flat2, 0.1, &[0, 3], MIN_WALKERS, [0.3, 0.6], 1, 8).unwrap();
        let h0 = &hs[0].1;
        assert_eq!(h0.total, MIN_WALKERS as u64);
        assert_eq!(h0.counts[h0.bin_of([0.3, 0.6])], MIN_WALKERS as u64);
        assert_eq!(hs[1].1.total, MIN_WALKERS as u64);
    }

    #[test]
    fn guards() {
        assert!(run_ensemble(Model::Flat2, 0.1, &[1], 100, [0.0, 0.0], 1, 8).is_err());
        assert!(run_ensemble(Model::Flat2, 0.1, &[2, 1], MIN_WALKERS, [0.0, 0.0], 1, 8).is_err());
        assert!(matches!(
            run_ensemble(Model::Flat2, 0.1, &[1, 2], MIN_WALKERS, [0.0, 0.0], 1, 8192),
            Err(Error::Resource(_))
        ));
        assert!(run_ensemble(Model::HeisLift, 0.1, &[1], MIN_WALKERS, [0.0, 0.0], 1, 8).is_err());
    }

    #[test]
    fn identical_seeds_identical_histograms() {
        let a = run_ensemble(Model::Grushin2, 0.1, &[5, 20], MIN_WALKERS, [0.1, 0.2], 7, 16).unwrap();
        let b = run_ensemble(Model::Grushin2, 0.1, &[5, 20], MIN_WALKERS, [0.1, 0.2], 7, 16).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn fit_recovers_synthetic_rate() {
        let rows: Vec<TvRow> = (0..40)
            .map(|n| {
                let floor = 0.01;
                let tv = (0.9f64 * (-0.05 * n as f64).exp()).hypot(floor);
                TvRow { n, tv, stderr: 1e-4, floor }
            })
            .collect();
        let fit = tv_decay_fit(&rows).unwrap();
        assert!((fit.rate - 0.05).abs() < 1e-12);
        assert!(fit.envelope_violations.is_empty());
        assert!(tv_decay_fit(&rows[..3]).is_err());
    }

    #[test]
    fn constant_function_is_exact() {
        let one = TrigPoly::constant(1.0);
        let (m, s) = deterministic_values(Model::Grushin2, 0.1, 1.0, 100, &one, [0.3, 0.1], 8, 16).unwrap();
        assert_eq!((m, s), (1.0, 1.0));
    }
}

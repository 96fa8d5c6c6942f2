//! Spectral diagnostics built on Galerkin eigendecompositions: gap, rescaled
//! low spectrum and its clustering onto the generator spectrum, Weyl counts,
//! Dirichlet forms, generator consistency, spectral projectors,
//! eigenfunction sup-norms and the Chapman-Taylor defect.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::fourier::{FourierCoeffs, TrigPoly};
use crate::models::Model;
use crate::operator::{
    assemble_generator_with, assemble_transfer_with, eigen, AssemblyOptions, GalerkinOperator, Layout, Spectrum,
};

/// Rescaled levels must satisfy `R <= RESCALED_GUARD / h^2`.
pub const RESCALED_GUARD: f64 = 0.25;
/// Rescaled values at or below this are the constant mode.
pub const ZERO_LEVEL: f64 = 1e-10;
/// Distance from 1 within which a transfer eigenvalue counts as 1.
pub const TOP_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_C4: f64 = 0.25;

/// `g = 1 - lambda_2` from transfer eigenvalues sorted descending.
pub fn spectral_gap(values: &[f64]) -> Result<f64> {
    let (top, second) = match values {
        [a, b, ..] => (*a, *b),
        _ => return param("the gap needs at least two eigenvalues"),
    };
    if (top - 1.0).abs() > TOP_TOLERANCE {
        return param(format!("top eigenvalue {top} is not 1"));
    }
    if (second - 1.0).abs() <= TOP_TOLERANCE {
        return Err(Error::Connectivity { second });
    }
    Ok(1.0 - second)
}

/// Rescaled values `(1 - lambda)/h^2` in `(ZERO_LEVEL, r]`, ascending.
pub fn rescaled_low_spectrum(spec: &Spectrum, r: f64) -> Result<Vec<f64>> {
    let h = spec.h.ok_or(Error::WrongKind { expected: "transfer" })?;
    if r > RESCALED_GUARD / (h * h) {
        return param(format!("R = {r} exceeds {RESCALED_GUARD}/h^2 = {}", RESCALED_GUARD / (h * h)));
    }
    let mut out: Vec<f64> = spec.rescaled()?.into_iter().filter(|&v| v > ZERO_LEVEL && v <= r).collect();
    out.sort_by(f64::total_cmp);
    Ok(out)
}

/// A generator eigenvalue level. Composite levels merge several distinct
/// eigenvalues into `[nu - spread, nu + spread]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Level {
    pub nu: f64,
    pub spread: f64,
    pub multiplicity: usize,
}

impl Level {
    pub fn lo(&self) -> f64 {
        self.nu - self.spread
    }

    pub fn hi(&self) -> f64 {
        self.nu + self.spread
    }
}

/// Groups ascending values that agree to `tol * max(1, |v|)`.
pub fn group_levels(values: &[f64], tol: f64) -> Vec<Level> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut out: Vec<(f64, f64, usize)> = Vec::new();
    for v in sorted {
        match out.last_mut() {
            Some((lo, hi, m)) if v - *hi <= tol * v.abs().max(1.0) => {
                *hi = v;
                *m += 1;
                let _ = lo;
            }
            _ => out.push((v, v, 1)),
        }
    }
    out.into_iter().map(|(lo, hi, m)| Level { nu: 0.5 * (lo + hi), spread: 0.5 * (hi - lo), multiplicity: m }).collect()
}

/// Merges levels whose `eps`-intervals overlap into composite levels with
/// summed multiplicity.
pub fn merge_levels(levels: &[Level], eps: f64) -> Vec<Level> {
    let mut out: Vec<(f64, f64, usize)> = Vec::new();
    for l in levels {
        match out.last_mut() {
            Some((_, hi, m)) if l.lo() - eps <= *hi + eps => {
                *hi = hi.max(l.hi());
                *m += l.multiplicity;
            }
            _ => out.push((l.lo(), l.hi(), l.multiplicity)),
        }
    }
    out.into_iter().map(|(lo, hi, m)| Level { nu: 0.5 * (lo + hi), spread: 0.5 * (hi - lo), multiplicity: m }).collect()
}

/// Generator levels `nu_j` (excluding 0) from an ascending generator spectrum.
pub fn generator_levels(spec: &Spectrum, tol: f64) -> Vec<Level> {
    let vals: Vec<f64> = spec.values().into_iter().filter(|&v| v > ZERO_LEVEL).collect();
    group_levels(&vals, tol)
}

#[derive(Debug, Clone, Serialize)]
pub struct ClusterCount {
    pub nu: f64,
    pub spread: f64,
    pub m_expected: usize,
    pub m_found: usize,
    pub members: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClusterReport {
    pub eps: f64,
    pub clusters: Vec<ClusterCount>,
    pub unmatched: Vec<f64>,
    pub passed: bool,
}

/// Assigns each rescaled value to the level interval `[lo - eps, hi + eps]`
/// containing it.
pub fn cluster_match(rescaled: &[f64], levels: &[Level], eps: f64) -> Result<ClusterReport> {
    if !(eps > 0.0) {
        return param("eps must be positive");
    }
    for w in levels.windows(2) {
        if w[0].hi() + eps >= w[1].lo() - eps {
            return Err(Error::OverlappingClusters { eps, half_gap: 0.5 * (w[1].lo() - w[0].hi()) });
        }
    }
    let mut clusters: Vec<ClusterCount> = levels
        .iter()
        .map(|l| ClusterCount { nu: l.nu, spread: l.spread, m_expected: l.multiplicity, m_found: 0, members: vec![] })
        .collect();
    let mut unmatched = Vec::new();
    for &v in rescaled {
        match levels.iter().position(|l| v >= l.lo() - eps && v <= l.hi() + eps) {
            Some(j) => {
                clusters[j].m_found += 1;
                clusters[j].members.push(v);
            }
            None => unmatched.push(v),
        }
    }
    let passed = unmatched.is_empty() && clusters.iter().all(|c| c.m_found == c.m_expected);
    Ok(ClusterReport { eps, clusters, unmatched, passed })
}

/// Multiplicities of `(pi^2/3)(m^2 + n^2)` over the lattice, up to `r`.
pub fn flat_levels(r: f64) -> Vec<Level> {
    let nu = PI * PI / 3.0;
    let kmax = (r / nu).sqrt().ceil() as i64 + 1;
    let mut counts = std::collections::BTreeMap::new();
    for m in -kmax..=kmax {
        for n in -kmax..=kmax {
            let s = m * m + n * n;
            if s > 0 && nu * s as f64 <= r {
                *counts.entry(s).or_insert(0usize) += 1;
            }
        }
    }
    counts.into_iter().map(|(s, c)| Level { nu: nu * s as f64, spread: 0.0, multiplicity: c }).collect()
}

/// `max_j |rescaled_j - oracle_j|` pairing both ascending lists, oracle
/// values repeated by multiplicity.
pub fn oracle_drift(rescaled: &[f64], oracle: &[f64]) -> f64 {
    rescaled.iter().zip(oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

/// How the cluster half-width is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsRule {
    Fixed(f64),
    /// A multiple of the observed drift from the generator spectrum.
    DriftMultiple(f64),
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    pub model: Model,
    pub h: f64,
    pub cutoff: usize,
    pub gap: f64,
    pub nu_hat: Option<f64>,
    pub order: Option<f64>,
    /// `(1 - lambda_j)/h^2` in `(0, R]`, ascending.
    pub rescaled: Vec<f64>,
    pub drift: f64,
    pub clusters: ClusterReport,
    pub weyl: Vec<WeylPoint>,
}

/// Low spectrum of `T_h` clustered onto the Galerkin generator spectrum at
/// the same cutoff.
pub fn spectrum_report(
    model: Model,
    h: f64,
    cutoff: usize,
    quadrature: usize,
    r: f64,
    eps: EpsRule,
) -> Result<SpectrumReport> {
    let opts = AssemblyOptions { quadrature, layout: Layout::Blocks, field: None };
    let (spec_t, spec_l) = rayon::join(
        || eigen(&assemble_transfer_with(model, h, cutoff, &opts)?),
        || eigen(&assemble_generator_with(model, cutoff, &opts)?),
    );
    spectrum_report_from(model, &spec_t?, &spec_l?, r, eps)
}

/// As [`spectrum_report`], from already computed transfer and generator spectra.
pub fn spectrum_report_from(
    model: Model,
    spec_t: &Spectrum,
    spec_l: &Spectrum,
    r: f64,
    eps: EpsRule,
) -> Result<SpectrumReport> {
    let h = spec_t.h.ok_or(Error::WrongKind { expected: "transfer" })?;
    if spec_l.h.is_some() {
        return Err(Error::WrongKind { expected: "generator" });
    }
    if spec_t.basis != spec_l.basis {
        return Err(Error::DimensionMismatch { expected: spec_t.basis.dim(), found: spec_l.basis.dim() });
    }
    let cutoff = spec_t.basis.cutoff;
    let gap = spectral_gap(&spec_t.values())?;
    let rescaled = rescaled_low_spectrum(spec_t, r)?;
    let oracle: Vec<f64> = spec_l.values().into_iter().filter(|&v| v > ZERO_LEVEL).collect();
    let drift = oracle_drift(&rescaled, &oracle);
    let eps = match eps {
        EpsRule::Fixed(e) => e,
        EpsRule::DriftMultiple(k) => k * drift,
    };
    // levels are the oracle values nu <= R; a value nu > R whose partner
    // lands below R shows up as an excess count
    let low: Vec<f64> = oracle.iter().copied().filter(|&v| v <= r).collect();
    let levels = merge_levels(&group_levels(&low, 1e-9), eps);
    let clusters = cluster_match(&rescaled, &levels, eps)?;
    let grid: Vec<f64> = (1..=20).map(|i| r * i as f64 / 20.0).collect();
    let weyl = weyl_count(&rescaled, &grid).counts;
    Ok(SpectrumReport { model, h, cutoff, gap, nu_hat: None, order: None, rescaled, drift, clusters, weyl })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct GapPoint {
    pub h: f64,
    pub gap: f64,
    pub gap_over_h2: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GapFit {
    pub points: Vec<GapPoint>,
    /// Richardson extrapolation of `g/h^2` assuming an `h^2` error.
    pub nu_hat: f64,
    /// Observed order from the last three points, when available.
    pub order: Option<f64>,
    pub monotone: bool,
    /// Every `g/h^2` within `[0.5, 1.5] nu_hat`.
    pub in_band: bool,
}

/// Gap of the assembled transfer operator at each `h`, in input order.
pub fn gap_scan(model: Model, hs: &[f64], cutoff: usize, quadrature: usize) -> Result<Vec<GapPoint>> {
    let opts = AssemblyOptions { quadrature, layout: Layout::Blocks, field: None };
    hs.par_iter()
        .map(|&h| {
            let spec = eigen(&assemble_transfer_with(model, h, cutoff, &opts)?)?;
            let gap = spectral_gap(&spec.values())?;
            Ok(GapPoint { h, gap, gap_over_h2: gap / (h * h) })
        })
        .collect()
}

pub fn gap_scaling_fit(points: &[GapPoint]) -> Result<GapFit> {
    if points.len() < 2 {
        return param("gap scaling needs at least two step sizes");
    }
    for w in points.windows(2) {
        if (w[1].h * 2.0 - w[0].h).abs() > 1e-12 * w[0].h {
            return param("step sizes must halve successively");
        }
    }
    let g: Vec<f64> = points.iter().map(|p| p.gap_over_h2).collect();
    let k = g.len();
    let nu_hat = (4.0 * g[k - 1] - g[k - 2]) / 3.0;
    let order = (k >= 3).then(|| ((g[k - 3] - g[k - 2]) / (g[k - 2] - g[k - 1])).log2());
    let monotone = points.windows(2).all(|w| w[1].gap < w[0].gap);
    let in_band = g.iter().all(|&v| v >= 0.5 * nu_hat && v <= 1.5 * nu_hat);
    Ok(GapFit { points: points.to_vec(), nu_hat, order, monotone, in_band })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeylPoint {
    pub lambda: f64,
    /// `#{j : 0 < rescaled_j <= lambda}`.
    pub count: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct WeylReport {
    pub counts: Vec<WeylPoint>,
    /// Least-squares slope of `log N` against `log(1 + lambda)` over `N > 0`.
    pub exponent: Option<f64>,
}

pub fn weyl_count(rescaled: &[f64], grid: &[f64]) -> WeylReport {
    let counts: Vec<WeylPoint> = grid
        .iter()
        .map(|&lambda| WeylPoint { lambda, count: rescaled.iter().filter(|&&v| v > ZERO_LEVEL && v <= lambda).count() })
        .collect();
    let pts: Vec<(f64, f64)> =
        counts.iter().filter(|c| c.count > 0).map(|c| ((1.0 + c.lambda).ln(), (c.count as f64).ln())).collect();
    WeylReport { counts, exponent: least_squares_slope(&pts) }
}

pub(crate) fn least_squares_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn quadratic_form(op: &GalerkinOperator, u: &FourierCoeffs) -> Result<f64> {
    Ok(u.inner(&op.apply(u)?).re)
}

/// `(E_h(u), E(u))` with `E_h(u) = ((1 - T_h)u | u)/h^2` and `E(u) = (L u | u)`.
pub fn dirichlet_forms(op_t: &GalerkinOperator, op_l: &GalerkinOperator, u: &FourierCoeffs) -> Result<(f64, f64)> {
    let h = op_t.step()?;
    if op_l.is_transfer() {
        return Err(Error::WrongKind { expected: "generator" });
    }
    let e_h = (u.inner(u).re - quadratic_form(op_t, u)?) / (h * h);
    Ok((e_h, quadratic_form(op_l, u)?))
}

/// `y`-frequencies present in a trigonometric polynomial, both signs.
pub fn y_frequencies(f: &TrigPoly) -> Vec<i64> {
    let mut ns: Vec<i64> = f.terms.iter().flat_map(|t| [t.n, -t.n]).collect();
    ns.sort_unstable();
    ns.dedup();
    ns
}

#[derive(Debug, Clone, Serialize)]
pub struct ConsistencyReport {
    /// `(h, e(h))` with `e(h) = sup |((1 - T_h)/h^2) g - L g|` on the grid.
    pub errors: Vec<(f64, f64)>,
    /// `e(h_i) / e(h_{i+1})`.
    pub ratios: Vec<f64>,
}

pub fn generator_consistency(
    model: Model,
    g: &TrigPoly,
    hs: &[f64],
    cutoff: usize,
    quadrature: usize,
) -> Result<ConsistencyReport> {
    let opts = AssemblyOptions { quadrature, layout: Layout::Frequencies(y_frequencies(g)), field: None };
    let op_l = assemble_generator_with(model, cutoff, &opts)?;
    let coeffs = g.coefficients(op_l.basis)?;
    let lg = op_l.apply(&coeffs)?;
    let errors: Vec<(f64, f64)> = hs
        .par_iter()
        .map(|&h| {
            let op_t = assemble_transfer_with(model, h, cutoff, &opts)?;
            let tg = op_t.apply(&coeffs)?;
            let mut diff = coeffs.sub(&tg);
            for (d, l) in diff.data.iter_mut().zip(&lg.data) {
                *d = *d / (h * h) - l;
            }
            Ok((h, diff.sup_norm()))
        })
        .collect::<Result<_>>()?;
    let ratios = errors.windows(2).map(|w| w[0].1 / w[1].1).collect();
    Ok(ConsistencyReport { errors, ratios })
}

#[derive(Debug, Clone)]
pub struct ProjectorSplit {
    /// Component on eigenvalues `>= 1 - c4`.
    pub low: FourierCoeffs,
    pub tail: FourierCoeffs,
    pub tail_sup: f64,
}

pub fn spectral_projectors(spec: &Spectrum, c4: f64, f: &FourierCoeffs) -> Result<ProjectorSplit> {
    spec.h.ok_or(Error::WrongKind { expected: "transfer" })?;
    if !(c4 > 0.0 && c4 <= 2.0) {
        return param("cutoff C4 must lie in (0, 2]");
    }
    let low = spec.apply_function(|v| if v >= 1.0 - c4 { 1.0 } else { 0.0 }, f)?;
    let tail = f.sub(&low);
    let tail_sup = tail.sup_norm();
    Ok(ProjectorSplit { low, tail, tail_sup })
}

#[derive(Debug, Clone, Serialize)]
pub struct ProjectorSweep {
    /// `(h, sup |Pi_2 f|)`.
    pub tails: Vec<(f64, f64)>,
    /// `tail(h_{i+1}) / tail(h_i)`.
    pub ratios: Vec<f64>,
}

/// Tail sup-norms of `f` over a sweep of `h`, assembling only the blocks `f` touches.
pub fn projector_sweep(
    model: Model,
    f: &FourierCoeffs,
    hs: &[f64],
    c4: f64,
    quadrature: usize,
) -> Result<ProjectorSweep> {
    let mut ns: Vec<i64> =
        f.data.iter().enumerate().filter(|(_, z)| z.norm_sqr() > 0.0).map(|(i, _)| f.basis.mode(i).1).collect();
    ns.sort_unstable();
    ns.dedup();
    let opts = AssemblyOptions { quadrature, layout: Layout::Frequencies(ns), field: None };
    let tails: Vec<(f64, f64)> = hs
        .par_iter()
        .map(|&h| {
            let spec = eigen(&assemble_transfer_with(model, h, f.basis.cutoff, &opts)?)?;
            Ok((h, spectral_projectors(&spec, c4, f)?.tail_sup))
        })
        .collect::<Result<_>>()?;
    let ratios = tails.windows(2).map(|w| w[1].1 / w[0].1).collect();
    Ok(ProjectorSweep { tails, ratios })
}

#[derive(Debug, Clone, Serialize)]
pub struct SupNormScan {
    /// `(lambda_{j,h}, sup |e_j|)` over the low band.
    pub entries: Vec<(f64, f64)>,
    /// Slope of `log sup` against `log(1 + lambda)`.
    pub exponent: Option<f64>,
}

/// Grid sup-norms of unit real eigenfunctions with eigenvalue `>= 1 - c4`.
pub fn eigenfunction_supnorm_scan(spec: &Spectrum, c4: f64) -> Result<SupNormScan> {
    let h = spec.h.ok_or(Error::WrongKind { expected: "transfer" })?;
    let low: Vec<_> = spec.pairs.iter().filter(|p| p.value >= 1.0 - c4).collect();
    if low.is_empty() {
        return Err(Error::EmptyWindow("no eigenvalues in the low band".into()));
    }
    let entries: Vec<(f64, f64)> =
        low.par_iter().map(|p| ((1.0 - p.value) / (h * h), spec.real_eigenfunction(p).sup_norm())).collect();
    let pts: Vec<(f64, f64)> =
        entries.iter().filter(|e| e.0 > ZERO_LEVEL).map(|&(l, s)| ((1.0 + l).ln(), s.ln())).collect();
    Ok(SupNormScan { entries, exponent: least_squares_slope(&pts) })
}

/// Greatest `n` with `n h^2 <= t`; the product is compared with a relative
/// slack of `1e-9` so that `t / h^2` landing just below an integer rounds up.
pub fn steps_within(t: f64, h: f64) -> usize {
    (t / (h * h) * (1.0 + 1e-9)).floor().max(0.0) as usize
}

#[derive(Debug, Clone, Serialize)]
pub struct ChapmanTaylorRow {
    pub delta: f64,
    pub n_max: usize,
    pub defect: f64,
    pub defect_over_delta2: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChapmanTaylorReport {
    pub rows: Vec<ChapmanTaylorRow>,
    /// `max / min` of `D(delta)/delta^2` across the sweep.
    pub variation: f64,
}

/// `D(delta) = max_{n h^2 <= delta} sup |T^n f - f - n (f - T f)|`.
pub fn chapman_taylor_check(op_t: &GalerkinOperator, f: &FourierCoeffs, deltas: &[f64]) -> Result<ChapmanTaylorReport> {
    let h = op_t.step()?;
    if deltas.is_empty() || deltas.iter().any(|&d| !(d >= h * h * (1.0 - 1e-9) && d <= 1.0)) {
        return param("each delta must satisfy h^2 <= delta <= 1");
    }
    let tf = op_t.apply(f)?;
    let first = f.sub(&tf);
    let n_top = deltas.iter().map(|&d| steps_within(d, h)).max().unwrap();
    // running max of the defect over n = 0..=n_top
    let mut running = Vec::with_capacity(n_top + 1);
    let mut power = f.clone();
    let mut best = 0.0f64;
    for n in 0..=n_top {
        if n > 0 {
            power = op_t.apply(&power)?;
        }
        let mut d = power.sub(f);
        for (a, b) in d.data.iter_mut().zip(&first.data) {
            *a += b * n as f64;
        }
        best = best.max(d.sup_norm());
        running.push(best);
    }
    let rows: Vec<ChapmanTaylorRow> = deltas
        .iter()
        .map(|&delta| {
            let n_max = steps_within(delta, h);
            let defect = running[n_max];
            ChapmanTaylorRow { delta, n_max, defect, defect_over_delta2: defect / (delta * delta) }
        })
        .collect();
    let ratios: Vec<f64> = rows.iter().map(|r| r.defect_over_delta2).collect();
    let variation = ratios.iter().copied().fold(0.0, f64::max) / ratios.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(ChapmanTaylorReport { rows, variation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{assemble_generator, assemble_transfer, flat_multiplier};

    #[test]
    fn gap_examples() {
        assert!((spectral_gap(&[1.0, 0.75, 0.1]).unwrap() - 0.25).abs() < 1e-15);
        assert!(matches!(spectral_gap(&[1.0, 1.0 - 1e-12]), Err(Error::Connectivity { .. })));
        assert!(spectral_gap(&[0.9, 0.5]).is_err());
        let spec = eigen(&assemble_transfer(Model::Flat2, 0.1, 4, 16).unwrap()).unwrap();
        assert!((spectral_gap(&spec.values()).unwrap() - 0.032_255_358).abs() < 1e-8);
    }

    #[test]
    fn guard_and_empty_band() {
        let spec = eigen(&assemble_transfer(Model::Flat2, 0.1, 4, 16).unwrap()).unwrap();
        assert!(rescaled_low_spectrum(&spec, 26.0).is_err());
        assert!(rescaled_low_spectrum(&spec, 3.0).unwrap().is_empty());
    }

    #[test]
    fn level_grouping_and_merge() {
        let lv = group_levels(&[1.0, 1.0 + 1e-12, 2.0, 2.05, 5.0], 1e-9);
        assert_eq!(lv.iter().map(|l| l.multiplicity).collect::<Vec<_>>(), vec![2, 1, 1, 1]);
        let merged = merge_levels(&lv, 0.1);
        assert_eq!(merged.iter().map(|l| l.multiplicity).collect::<Vec<_>>(), vec![2, 2, 1]);
        assert!((merged[1].lo() - 2.0).abs() < 1e-15 && (merged[1].hi() - 2.05).abs() < 1e-15);
        assert!(cluster_match(&[], &lv, 0.1).is_err());
    }

    #[test]
    fn cluster_bookkeeping() {
        let levels = flat_levels(15.0);
        assert_eq!(levels.iter().map(|l| l.multiplicity).collect::<Vec<_>>(), vec![4, 4, 4]);
        let empty = cluster_match(&[], &levels, 0.1).unwrap();
        assert!(empty.clusters.iter().all(|c| c.m_found == 0) && !empty.passed);
        let r = cluster_match(&[3.3, 3.29, 7.0, 20.0], &levels, 0.1).unwrap();
        assert_eq!(r.clusters[0].m_found, 2);
        assert_eq!(r.unmatched, vec![7.0, 20.0]);
        let total: usize = r.clusters.iter().map(|c| c.m_found).sum::<usize>() + r.unmatched.len();
        assert_eq!(total, 4);
    }

    #[test]
    fn fit_needs_two_halving_steps() {
        let p = |h: f64, g: f64| GapPoint { h, gap: g * h * h, gap_over_h2: g };
        assert!(gap_scaling_fit(&[p(0.1, 3.0)]).is_err());
        assert!(gap_scaling_fit(&[p(0.1, 3.0), p(0.04, 3.1)]).is_err());
        // g/h^2 = 2 - h^2 extrapolates exactly
        let fit = gap_scaling_fit(&[p(0.2, 2.0 - 0.04), p(0.1, 2.0 - 0.01), p(0.05, 2.0 - 0.0025)]).unwrap();
        assert!((fit.nu_hat - 2.0).abs() < 1e-14);
        assert!((fit.order.unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn weyl_counts_are_monotone() {
        let w = weyl_count(&[0.0, 1.0, 2.0, 2.0, 5.0], &[0.0, 1.5, 2.0, 10.0]);
        assert_eq!(w.counts.iter().map(|c| c.count).collect::<Vec<_>>(), vec![0, 1, 3, 4]);
        assert!(w.exponent.is_some());
    }

    #[test]
    fn dirichlet_form_of_cosine() {
        let t = assemble_transfer(Model::Flat2, 0.1, 4, 16).unwrap();
        let l = assemble_generator(Model::Flat2, 4).unwrap();
        let u = TrigPoly::cosine(1, 0, 1.0).coefficients(t.basis).unwrap();
        let (eh, e) = dirichlet_forms(&t, &l, &u).unwrap();
        assert!((eh - 0.5 * (1.0 - flat_multiplier(1, 0, 0.1)) / 0.01).abs() < 1e-10);
        assert!((eh - 1.6128).abs() < 1e-4);
        assert!((e - PI * PI / 6.0).abs() < 1e-12);
        let one = TrigPoly::constant(1.0).coefficients(t.basis).unwrap();
        let (a, b) = dirichlet_forms(&t, &l, &one).unwrap();
        assert_eq!((a, b), (0.0, 0.0));
    }

    #[test]
    fn chapman_taylor_trivial_steps() {
        let t = assemble_transfer(Model::Flat2, 0.1, 4, 16).unwrap();
        let f = TrigPoly::cosine(1, 0, 1.0).coefficients(t.basis).unwrap();
        let r = chapman_taylor_check(&t, &f, &[0.01, 0.02]).unwrap();
        assert_eq!(r.rows[0].n_max, 1);
        assert!(r.rows[0].defect < 1e-15);
        let tau = flat_multiplier(1, 0, 0.1);
        let exact = (tau * tau - 1.0 + 2.0 * (1.0 - tau)).abs();
        assert!((r.rows[1].defect - exact).abs() < 1e-14);
        assert!(chapman_taylor_check(&t, &f, &[2.0]).is_err());
    }

    #[test]
    fn step_count_uses_floor() {
        assert_eq!(steps_within(1.0, 0.05), 400);
        assert_eq!(steps_within(1.0, 0.025), 1600);
        assert_eq!(steps_within(0.0099, 0.1), 0);
        assert_eq!(steps_within(0.5, 0.05), 200);
    }
}

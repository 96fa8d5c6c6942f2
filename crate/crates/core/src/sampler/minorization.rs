use rayon::prelude::*;
use serde::Serialize;

use super::{check_step, next_draw, walker_stream, AUX_STREAM, CHUNK};
use crate::error::{param, Error, Result};
use crate::lie::{box_volume_mc, sample_box, walk_constants, LieStructure};
use crate::models::{Model, Point2};

/// Bins whose `S` count falls below this are excluded from the ratio.
pub const MIN_BIN_COUNT: u64 = 50;

#[derive(Debug, Clone, Serialize)]
pub struct MinorizationReport {
    pub p_steps: usize,
    /// Half-width of the square window around `x0`, `P h max(1, eps)`.
    pub window: f64,
    /// `min_b H_T(b) / ((2 eps)^D H_S(b))` over bins with `H_S >= MIN_BIN_COUNT`.
    pub c_hat: f64,
    pub used_bins: usize,
    pub excluded_bins: usize,
    /// Monte Carlo estimate of `h^-Q vol(I_{eps,h})`, which should equal `(2 eps)^D`.
    pub s_mass: f64,
    pub s_mass_stderr: f64,
    pub s_mass_expected: f64,
    /// Some `S` sample fell where the `P`-step chain put no mass or outside the window.
    pub support_violation: bool,
}

/// Offset `x - x0`, wrapped to the nearest image on the torus.
fn offset(model: Model, x: Point2, x0: Point2) -> Point2 {
    let d = [x[0] - x0[0], x[1] - x0[1]];
    if model.on_torus() {
        [d[0] - d[0].round(), d[1] - d[1].round()]
    } else {
        d
    }
}

struct Window {
    half: f64,
    bins: usize,
}

impl Window {
    fn bin(&self, d: Point2) -> Option<usize> {
        let idx = |v: f64| {
            let u = (v + self.half) / (2.0 * self.half) * self.bins as f64;
            (u >= 0.0 && u < self.bins as f64).then_some(u as usize)
        };
        Some(idx(d[1])? * self.bins + idx(d[0])?)
    }
}

/// Empirical constant `c` in `t_h^P(x0, .) >= c S^eps_h(x0, .)` at bin resolution.
#[allow(clippy::too_many_arguments)]
pub fn minorization_ratio(
    model: Model,
    lie: &LieStructure,
    h: f64,
    eps: f64,
    x0: Point2,
    n_samples: usize,
    bins: usize,
    seed: u64,
) -> Result<MinorizationReport> {
    check_step(h)?;
    let (p, r) = model.lift_algebra()?;
    if (lie.generators(), lie.step()) != (p, r) {
        return param(format!("{model} lifts to p = {p}, r = {r}"));
    }
    if n_samples == 0 || bins == 0 {
        return param("samples and bins must be positive");
    }
    if bins.saturating_mul(bins) > super::MAX_HISTOGRAM_CELLS {
        return Err(Error::Resource(format!("{bins}x{bins} window bins")));
    }
    let consts = walk_constants(lie);
    let p_steps = consts.p_steps;
    let window = Window { half: p_steps as f64 * h * eps.max(1.0), bins };
    let x0 = model.canonicalize(x0);
    let n_chunks = n_samples.div_ceil(CHUNK);
    let range = |c: usize| c * CHUNK..((c + 1) * CHUNK).min(n_samples);
    let empty = || (vec![0u64; bins * bins], 0u64);
    let add = |mut a: (Vec<u64>, u64), b: (Vec<u64>, u64)| {
        for (x, y) in a.0.iter_mut().zip(&b.0) {
            *x += y;
        }
        a.1 += b.1;
        a
    };

    let (h_t, t_out) = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = empty();
            for i in range(c) {
                let mut rng = walker_stream(seed, i as u64);
                let mut x = x0;
                for _ in 0..p_steps {
                    let d = next_draw(&mut rng, model.fields());
                    x = model.flow_unchecked(d.field, h * d.s, x);
                }
                match window.bin(offset(model, x, x0)) {
                    Some(b) => acc.0[b] += 1,
                    None => acc.1 += 1,
                }
            }
            acc
        })
        .reduce(empty, add);
    debug_assert!(t_out == 0 || eps > 1.0);

    let (h_s, s_out) = (0..n_chunks)
        .into_par_iter()
        .map(|c| -> Result<(Vec<u64>, u64)> {
            let mut acc = empty();
            let mut rng = walker_stream(seed, AUX_STREAM + c as u64);
            for _ in range(c) {
                let u = sample_box(lie, eps, h, &mut rng)?;
                let x = model.lift_flow(&u.coords, x0)?;
                match window.bin(offset(model, x, x0)) {
                    Some(b) => acc.0[b] += 1,
                    None => acc.1 += 1,
                }
            }
            Ok(acc)
        })
        .try_reduce(empty, |a, b| Ok(add(a, b)))?;

    let mass = (2.0 * eps).powi(consts.dim as i32);
    let mut c_hat = f64::INFINITY;
    let (mut used, mut excluded) = (0, 0);
    let mut violation = s_out > 0;
    for (&t, &s) in h_t.iter().zip(&h_s) {
        if s > 0 && t == 0 {
            violation = true;
        }
        if s >= MIN_BIN_COUNT {
            used += 1;
            c_hat = c_hat.min(t as f64 / (mass * s as f64));
        } else if s > 0 {
            excluded += 1;
        }
    }
    if used == 0 {
        return Err(Error::EmptyWindow(format!("no bin reached {MIN_BIN_COUNT} box samples")));
    }
    let mut rng = walker_stream(seed, 2 * AUX_STREAM);
    let (s_mass, s_mass_stderr) = box_volume_mc(lie, eps, h, n_samples, &mut rng)?;
    Ok(MinorizationReport {
        p_steps,
        window: window.half,
        c_hat,
        used_bins: used,
        excluded_bins: excluded,
        s_mass,
        s_mass_stderr,
        s_mass_expected: mass,
        support_violation: violation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::build_free_nilpotent;

    #[test]
    fn lift_must_match_model() {
        let heis = build_free_nilpotent(2, 2).unwrap();
        assert!(minorization_ratio(Model::Flat2, &heis, 0.1, 0.5, [0.5, 0.5], 10_000, 40, 1).is_err());
        assert!(minorization_ratio(Model::Grushin2, &heis, 0.1, 0.5, [0.5, 0.5], 10_000, 40, 1).is_err());
    }

    #[test]
    fn flat_two_step_kernel_dominates_box() {
        let lie = build_free_nilpotent(2, 1).unwrap();
        let r = minorization_ratio(Model::Flat2, &lie, 0.1, 0.5, [0.5, 0.5], 200_000, 40, 4).unwrap();
        assert_eq!(r.p_steps, 2);
        assert!(!r.support_violation);
        assert_eq!(r.used_bins, 100);
        assert!(r.c_hat > 0.08, "{}", r.c_hat);
        let wide = minorization_ratio(Model::Flat2, &lie, 0.1, 1.5, [0.5, 0.5], 200_000, 40, 4).unwrap();
        assert!(wide.support_violation);
    }

    #[test]
    fn window_binning() {
        let w = Window { half: 0.2, bins: 40 };
        assert_eq!(w.bin([-0.2, -0.2]), Some(0));
        assert_eq!(w.bin([0.2, 0.0]), None);
        assert_eq!(w.bin([0.0, 0.0]), Some(20 * 40 + 20));
        let d = offset(Model::Flat2, [0.05, 0.5], [0.95, 0.5]);
        assert!((d[0] - 0.1).abs() < 1e-15 && d[1] == 0.0);
    }
}

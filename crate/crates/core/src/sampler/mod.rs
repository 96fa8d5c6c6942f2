//! Monte Carlo engine for the walk `x_{n+1} = e^{t X_k} x_n` with `k` uniform
//! over the fields and `t` uniform in `[-h, h]`.
//!
//! Walker `w` under seed `s` reads ChaCha8 stream `w` of key `s`; step `n`
//! consumes words `4n..4n+4` of that stream, so any draw is addressable by
//! `(seed, walker, step)` and scheduling cannot change results.

mod ensemble;
mod histogram;
mod minorization;
mod path;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{param, Result};
use crate::models::{Model, Point2};

pub use ensemble::{
    diffusion_limit_test, ensemble_mean, matrix_decay_slope, run_ensemble, tv_decay_fit, tv_decay_rate,
    DiffusionReport, EnsembleMean, TvDecayReport, TvFit, TvRow, CHUNK, MAX_HISTOGRAM_CELLS, MIN_WALKERS,
};
pub use histogram::{ks_distance, Histogram};
pub use minorization::{minorization_ratio, MinorizationReport, MIN_BIN_COUNT};
pub use path::WalkPath;

/// Words of the stream consumed by one step.
pub const WORDS_PER_STEP: u128 = 4;
/// Stream offset separating auxiliary samplers from walker streams.
pub const AUX_STREAM: u64 = 1 << 32;

/// One step's randomness: field index and `s` uniform in `[-1, 1)`; the time is `h s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Draw {
    pub field: usize,
    pub s: f64,
}

pub fn walker_stream(seed: u64, walker: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(walker);
    rng
}

pub(crate) fn next_draw(rng: &mut ChaCha8Rng, fields: usize) -> Draw {
    let (a, b) = (rng.next_u64(), rng.next_u64());
    let field = (((a >> 32) * fields as u64) >> 32) as usize;
    let s = (b >> 11) as f64 * (2.0 / (1u64 << 53) as f64) - 1.0;
    Draw { field, s }
}

pub(crate) fn check_step(h: f64) -> Result<()> {
    if !(h > 0.0 && h <= 0.5) {
        return param(format!("step h = {h} outside (0, 0.5]"));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct WalkState {
    /// Canonicalized to the model's fundamental domain.
    pub position: Point2,
    pub steps: u64,
    rng: ChaCha8Rng,
}

impl WalkState {
    pub fn new(model: Model, x0: Point2, seed: u64, walker: u64) -> Self {
        Self { position: model.canonicalize(x0), steps: 0, rng: walker_stream(seed, walker) }
    }

    /// The state's stream positioned at step `n`, independent of history.
    pub fn seek(&mut self, n: u64) {
        self.rng.set_word_pos(WORDS_PER_STEP * n as u128);
        self.steps = n;
    }

    pub fn next_draw(&mut self, model: Model) -> Draw {
        next_draw(&mut self.rng, model.fields())
    }
}

pub fn step(model: Model, h: f64, state: &mut WalkState) -> Result<()> {
    check_step(h)?;
    let d = state.next_draw(model);
    state.position = model.flow_unchecked(d.field, h * d.s, state.position);
    state.steps += 1;
    Ok(())
}

/// Applies a prescribed draw: `x -> e^{h s X_k} x`.
pub fn apply_draw(model: Model, h: f64, x: Point2, d: Draw) -> Result<Point2> {
    model.flow(d.field, h * d.s, x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forced_draws() {
        let x = apply_draw(Model::Flat2, 0.1, [0.0, 0.0], Draw { field: 0, s: 0.5 }).unwrap();
        assert!((x[0] - 0.05).abs() < 1e-15 && x[1] == 0.0);
        let y = apply_draw(Model::Grushin2, 0.1, [0.5, 0.3], Draw { field: 1, s: 0.9 }).unwrap();
        assert!((y[1] - 0.3).abs() < 1e-15);
        assert!(apply_draw(Model::Flat2, 0.1, [0.0, 0.0], Draw { field: 2, s: 0.0 }).is_err());
    }

    #[test]
    fn identical_streams_identical_paths() {
        let mut a = WalkState::new(Model::Grushin2, [0.2, 0.7], 11, 3);
        let mut b = a.clone();
        for _ in 0..10_000 {
            step(Model::Grushin2, 0.1, &mut a).unwrap();
            step(Model::Grushin2, 0.1, &mut b).unwrap();
            assert_eq!(a.position, b.position);
        }
        assert_eq!(a.steps, 10_000);
        assert!(step(Model::Flat2, 0.6, &mut a).is_err());
    }

    #[test]
    fn draws_are_addressable_by_step() {
        let mut a = WalkState::new(Model::Flat2, [0.0, 0.0], 5, 9);
        let draws: Vec<Draw> = (0..20).map(|_| a.next_draw(Model::Flat2)).collect();
        let mut b = WalkState::new(Model::Flat2, [0.0, 0.0], 5, 9);
        b.seek(13);
        assert_eq!(b.next_draw(Model::Flat2), draws[13]);
        let mut c = WalkState::new(Model::Flat2, [0.0, 0.0], 5, 10);
        assert_ne!(c.next_draw(Model::Flat2), draws[0]);
    }

    #[test]
    fn draw_ranges() {
        let mut rng = walker_stream(1, 0);
        let mut seen = [0usize; 3];
        for _ in 0..30_000 {
            let d = next_draw(&mut rng, 3);
            assert!((-1.0..1.0).contains(&d.s));
            seen[d.field] += 1;
        }
        assert!(seen.iter().all(|&c| (c as f64 - 10_000.0).abs() < 500.0));
    }
}

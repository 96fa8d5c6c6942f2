use rand_chacha::ChaCha8Rng;

use super::{check_step, next_draw, Draw};
use crate::error::{param, Result};
use crate::models::{Model, Point2};

/// Continuous interpolation of the chain: on slot `j`, time `j h^2 + tau`
/// maps to `e^{(tau/h^2) h s_j X_{k_j}} x_j`.
#[derive(Debug, Clone)]
pub struct WalkPath {
    pub model: Model,
    pub h: f64,
    pub draws: Vec<Draw>,
    /// Chain positions `x_0..x_J`.
    pub nodes: Vec<Point2>,
}

impl WalkPath {
    /// Path on `[0, t_final]` using `ceil(t_final/h^2)` slots of `rng`.
    pub fn sample(model: Model, h: f64, t_final: f64, x0: Point2, rng: &mut ChaCha8Rng) -> Result<Self> {
        check_step(h)?;
        if !(t_final >= 0.0) {
            return param("final time must be nonnegative");
        }
        let slots = (t_final / (h * h) * (1.0 - 1e-12)).ceil() as usize;
        let draws = (0..slots).map(|_| next_draw(rng, model.fields())).collect();
        Self::from_draws(model, h, x0, draws)
    }

    pub fn from_draws(model: Model, h: f64, x0: Point2, draws: Vec<Draw>) -> Result<Self> {
        check_step(h)?;
        let mut nodes = Vec::with_capacity(draws.len() + 1);
        nodes.push(model.canonicalize(x0));
        for d in &draws {
            nodes.push(model.flow(d.field, h * d.s, *nodes.last().unwrap())?);
        }
        Ok(Self { model, h, draws, nodes })
    }

    pub fn horizon(&self) -> f64 {
        self.draws.len() as f64 * self.h * self.h
    }

    /// `omega(t)` for `0 <= t <= horizon`.
    pub fn position(&self, t: f64) -> Result<Point2> {
        if !(t >= 0.0 && t <= self.horizon() * (1.0 + 1e-12)) {
            return param(format!("time {t} outside [0, {}]", self.horizon()));
        }
        if self.draws.is_empty() {
            return Ok(self.nodes[0]);
        }
        let h2 = self.h * self.h;
        let j = ((t / h2).floor() as usize).min(self.draws.len() - 1);
        Ok(self.slot(j, (t - j as f64 * h2) / h2))
    }

    /// Point at fraction `u` of slot `j`.
    fn slot(&self, j: usize, u: f64) -> Point2 {
        let d = self.draws[j];
        self.model.flow_unchecked(d.field, u * self.h * d.s, self.nodes[j])
    }

    /// `max_j dist(omega((j+1) h^2 -), x_{j+1})` over slot ends.
    pub fn continuity_defect(&self) -> f64 {
        (0..self.draws.len()).map(|j| self.model.distance(self.slot(j, 1.0), self.nodes[j + 1])).fold(0.0, f64::max)
    }
}

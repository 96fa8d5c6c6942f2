//! Built-in two-dimensional models with closed-form, divergence-free flows.
//!
//! Every field has the form `X_k = a_k(x) d/dx + b_k(x) d/dy`, so each flow
//! commutes with translations in `y`. Field indices are 0-based.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};

pub type Point2 = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    /// Torus with `X1 = d/dx`, `X2 = d/dy`.
    Flat2,
    /// Torus with `X1 = d/dx`, `X2 = sin(2 pi x) d/dy`.
    Grushin2,
    /// Plane with `X1 = d/dx`, `X2 = x d/dy` and its Heisenberg lift.
    HeisLift,
}

/// One entry of the bracket table: the iterated bracket `X^word` at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct BracketVector {
    pub word: Vec<usize>,
    pub value: Point2,
}

impl Model {
    pub const ALL: [Model; 3] = [Model::Flat2, Model::Grushin2, Model::HeisLift];

    pub fn name(self) -> &'static str {
        match self {
            Model::Flat2 => "flat2",
            Model::Grushin2 => "grushin2",
            Model::HeisLift => "heis_lift",
        }
    }

    pub fn dim(self) -> usize {
        2
    }

    pub fn fields(self) -> usize {
        2
    }

    /// Bracket step needed for the Hörmander condition.
    pub fn step(self) -> usize {
        match self {
            Model::Flat2 => 1,
            Model::Grushin2 | Model::HeisLift => 2,
        }
    }

    pub fn on_torus(self) -> bool {
        !matches!(self, Model::HeisLift)
    }

    /// Coefficients `(a_k(x), b_k(x))` of field `k`.
    pub fn coefficients(self, k: usize, x: f64) -> (f64, f64) {
        match (self, k) {
            (_, 0) => (1.0, 0.0),
            (Model::Flat2, _) => (0.0, 1.0),
            (Model::Grushin2, _) => (0.0, (TAU * x).sin()),
            (Model::HeisLift, _) => (0.0, x),
        }
    }

    pub fn field(self, k: usize, x: Point2) -> Result<Point2> {
        self.check_field(k)?;
        let (a, b) = self.coefficients(k, x[0]);
        Ok([a, b])
    }

    /// Upper bounds on `|a_k|` and `|b_k|` over the fundamental domain.
    pub fn speed_bounds(self, k: usize) -> Result<(f64, f64)> {
        self.check_field(k)?;
        match (self, k) {
            (_, 0) => Ok((1.0, 0.0)),
            (Model::HeisLift, _) => Err(Error::Unsupported("the plane model has unbounded speed".into())),
            _ => Ok((0.0, 1.0)),
        }
    }

    fn check_field(self, k: usize) -> Result<()> {
        if k >= self.fields() {
            return param(format!("field index {k} out of range for {} fields", self.fields()));
        }
        Ok(())
    }

    /// Exact flow `e^{t X_k} x`, canonicalized to the fundamental domain.
    pub fn flow(self, k: usize, t: f64, x: Point2) -> Result<Point2> {
        self.check_field(k)?;
        Ok(self.flow_unchecked(k, t, x))
    }

    pub(crate) fn flow_unchecked(self, k: usize, t: f64, x: Point2) -> Point2 {
        self.canonicalize(self.flow_lifted(k, t, x))
    }

    /// Flow on the universal cover: no wrapping.
    pub fn flow_lifted(self, k: usize, t: f64, x: Point2) -> Point2 {
        // every field coefficient depends on x only and a_k b_k = 0
        let (a, b) = self.coefficients(k, x[0]);
        [x[0] + t * a, x[1] + t * b]
    }

    pub fn canonicalize(self, x: Point2) -> Point2 {
        if self.on_torus() {
            [wrap_unit(x[0]), wrap_unit(x[1])]
        } else {
            x
        }
    }

    /// Distance in the wrapped (torus) or Euclidean (plane) metric.
    pub fn distance(self, a: Point2, b: Point2) -> f64 {
        let d = |u: f64, v: f64| {
            let raw = (u - v).abs();
            if self.on_torus() {
                let r = raw.rem_euclid(1.0);
                r.min(1.0 - r)
            } else {
                raw
            }
        };
        d(a[0], b[0]).hypot(d(a[1], b[1]))
    }

    /// Iterated brackets `X^word(x)` for `|word| <= step`.
    pub fn bracket_table(self, x: Point2) -> Vec<BracketVector> {
        let mut out = vec![
            BracketVector { word: vec![0], value: [1.0, 0.0] },
            BracketVector { word: vec![1], value: self.field(1, x).unwrap() },
        ];
        let commutator = match self {
            Model::Flat2 => return out,
            Model::Grushin2 => TAU * (TAU * x[0]).cos(),
            Model::HeisLift => 1.0,
        };
        out.push(BracketVector { word: vec![0, 1], value: [0.0, commutator] });
        out
    }

    /// Rank of the bracket vectors of length at most `depth` at `x`.
    pub fn rank_up_to(self, x: Point2, depth: usize) -> usize {
        let vectors: Vec<Point2> =
            self.bracket_table(x).into_iter().filter(|b| b.word.len() <= depth).map(|b| b.value).collect();
        rank2(&vectors)
    }

    pub fn hormander_rank(self, x: Point2) -> usize {
        self.rank_up_to(x, self.step())
    }

    /// Central-difference divergence of field `k` at `x`.
    pub fn divergence_residual(self, k: usize, x: Point2) -> Result<f64> {
        self.check_field(k)?;
        let d = 1e-5;
        let at = |dx: f64, dy: f64| self.field(k, [x[0] + dx, x[1] + dy]).unwrap();
        let da = (at(d, 0.0)[0] - at(-d, 0.0)[0]) / (2.0 * d);
        let db = (at(0.0, d)[1] - at(0.0, -d)[1]) / (2.0 * d);
        Ok(da + db)
    }

    /// Finite-difference Jacobian determinant of `x -> e^{t X_k} x`.
    pub fn flow_jacobian(self, k: usize, t: f64, x: Point2) -> Result<f64> {
        self.check_field(k)?;
        let d = 1e-4;
        let col = |i: usize| {
            let mut p = x;
            let mut m = x;
            p[i] += d;
            m[i] -= d;
            let (fp, fm) = (self.flow_lifted(k, t, p), self.flow_lifted(k, t, m));
            [(fp[0] - fm[0]) / (2.0 * d), (fp[1] - fm[1]) / (2.0 * d)]
        };
        let (cx, cy) = (col(0), col(1));
        Ok(cx[0] * cy[1] - cx[1] * cy[0])
    }

    /// Exponential of the lifted algebra element `lambda(u)` applied to `x`.
    ///
    /// flat2: `u = (u1, u2)` translates. heis_lift:
    /// `(x + u1, y + u3 + u2 x + u1 u2 / 2)`.
    pub fn lift_flow(self, u: &[f64], x: Point2) -> Result<Point2> {
        let expected = match self {
            Model::Flat2 => 2,
            Model::HeisLift => 3,
            Model::Grushin2 => {
                return Err(Error::Unsupported("grushin2 has no nilpotent lift".into()));
            }
        };
        if u.len() != expected {
            return Err(Error::DimensionMismatch { expected, found: u.len() });
        }
        Ok(match self {
            Model::HeisLift => [x[0] + u[0], x[1] + u[2] + u[1] * x[0] + 0.5 * u[0] * u[1]],
            _ => self.canonicalize([x[0] + u[0], x[1] + u[1]]),
        })
    }

    /// `(generators, step)` of the free nilpotent algebra the lift lives in.
    pub fn lift_algebra(self) -> Result<(usize, usize)> {
        match self {
            Model::Flat2 => Ok((2, 1)),
            Model::HeisLift => Ok((2, 2)),
            Model::Grushin2 => Err(Error::Unsupported("grushin2 has no nilpotent lift".into())),
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Model::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| Error::Parameter(format!("unknown model {s:?}")))
    }
}

pub(crate) fn wrap_unit(v: f64) -> f64 {
    let r = v.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

fn rank2(vectors: &[Point2]) -> usize {
    let scale = vectors.iter().map(|v| v[0].abs().max(v[1].abs())).fold(0.0, f64::max);
    let tol = 1e-12 * scale.max(1.0);
    if scale <= tol {
        return 0;
    }
    for (i, a) in vectors.iter().enumerate() {
        for b in &vectors[i + 1..] {
            if (a[0] * b[1] - a[1] * b[0]).abs() > tol * scale {
                return 2;
            }
        }
    }
    1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flow_examples() {
        let f = Model::Flat2.flow(0, 0.3, [0.9, 0.5]).unwrap();
        assert!((f[0] - 0.2).abs() < 1e-15 && f[1] == 0.5);
        let g = Model::Grushin2.flow(1, 0.125, [0.25, 0.5]).unwrap();
        assert!((g[1] - 0.625).abs() < 1e-15);
        let g = Model::Grushin2.flow(1, 0.3, [0.5, 0.4]).unwrap();
        assert!((g[1] - 0.4).abs() < 1e-15);
        assert!(Model::Flat2.flow(2, 0.1, [0.0, 0.0]).is_err());
    }

    #[test]
    fn lift_examples() {
        let m = Model::HeisLift;
        assert_eq!(m.lift_flow(&[1.0, 0.0, 0.0], [0.0, 0.0]).unwrap(), [1.0, 0.0]);
        assert_eq!(m.lift_flow(&[0.0, 0.0, 0.7], [0.3, 2.0]).unwrap(), [0.3, 2.7]);
        assert_eq!(m.lift_flow(&[1.0, 1.0, 0.0], [0.0, 0.0]).unwrap(), [1.0, 0.5]);
        assert!(Model::Grushin2.lift_flow(&[0.0, 0.0], [0.0, 0.0]).is_err());
        assert!(m.lift_flow(&[0.0, 0.0], [0.0, 0.0]).is_err());
    }

    #[test]
    fn hormander_examples() {
        assert_eq!(Model::Flat2.hormander_rank([0.3, 0.1]), 2);
        assert_eq!(Model::Grushin2.rank_up_to([0.25, 0.7], 1), 2);
        assert_eq!(Model::Grushin2.rank_up_to([0.5, 0.7], 1), 1);
        assert_eq!(Model::Grushin2.hormander_rank([0.5, 0.7]), 2);
        assert_eq!(Model::HeisLift.rank_up_to([0.0, 3.0], 1), 1);
        assert_eq!(Model::HeisLift.hormander_rank([0.0, 3.0]), 2);
    }

    #[test]
    fn names_round_trip() {
        for m in Model::ALL {
            assert_eq!(m.name().parse::<Model>().unwrap(), m);
        }
        assert!("torus".parse::<Model>().is_err());
    }

    #[test]
    fn wrapping_stays_in_unit_interval() {
        assert_eq!(wrap_unit(-1e-18), 0.0);
        assert_eq!(wrap_unit(1.0), 0.0);
        assert!((wrap_unit(-0.25) - 0.75).abs() < 1e-16);
        assert!((Model::Flat2.distance([0.95, 0.0], [0.05, 0.0]) - 0.1).abs() < 1e-12);
    }
}

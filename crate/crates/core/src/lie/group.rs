use std::collections::HashMap;

use num_traits::Float;

use super::LieStructure;
use crate::error::{param, Result};
use crate::scalar::Scalar;

/// A point of the nilpotent group in exponential (Hall) coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupPoint<T> {
    pub coords: Vec<T>,
}

impl<T: Scalar> GroupPoint<T> {
    pub fn new(coords: Vec<T>) -> Self {
        Self { coords }
    }

    pub fn identity(s: &LieStructure) -> Self {
        Self { coords: vec![T::zero(); s.dim()] }
    }

    /// Group element `exp(c Y_g)` for generator `g`.
    pub fn generator(s: &LieStructure, g: usize, c: T) -> Self {
        let mut coords = vec![T::zero(); s.dim()];
        coords[g] = c;
        Self { coords }
    }

    pub fn inverse(&self) -> Self {
        Self { coords: self.coords.iter().cloned().map(|c| -c).collect() }
    }

    pub fn is_identity(&self) -> bool {
        self.coords.iter().all(|c| c.is_zero())
    }

    /// Coordinates of layer `j` (1-based).
    pub fn layer<'a>(&'a self, s: &LieStructure, j: usize) -> &'a [T] {
        &self.coords[s.layer_range(j)]
    }

    /// Heisenberg only: the `(x, y, t)` chart with `t = 2 c`, where `c` is the
    /// coefficient of `[Y1, Y2]`, so the law reads `t'' = t + t' + x y' - y x'`.
    pub fn to_heisenberg_chart(&self) -> [T; 3] {
        let two = T::from_int(2);
        [self.coords[0].clone(), self.coords[1].clone(), two * self.coords[2].clone()]
    }

    pub fn from_heisenberg_chart(xyt: [T; 3]) -> Self {
        let [x, y, t] = xyt;
        Self { coords: vec![x, y, t / T::from_int(2)] }
    }
}

impl LieStructure {
    /// Group law `log(exp a exp b)` through the truncated BCH series.
    pub fn group_product<T: Scalar>(&self, a: &GroupPoint<T>, b: &GroupPoint<T>) -> Result<GroupPoint<T>> {
        self.check_dim(a.coords.len())?;
        self.check_dim(b.coords.len())?;
        Ok(self.product_unchecked(a, b))
    }

    pub(crate) fn product_unchecked<T: Scalar>(&self, a: &GroupPoint<T>, b: &GroupPoint<T>) -> GroupPoint<T> {
        let x = &a.coords;
        let y = &b.coords;
        let mut out = vec![T::zero(); self.dim()];
        let mut memo: HashMap<&[bool], Vec<T>> = HashMap::new();
        for (word, coef) in self.bch().terms() {
            let value = nested(self, word, x, y, &mut memo);
            let c = T::from_ratio(*coef.numer(), *coef.denom());
            for (o, v) in out.iter_mut().zip(&value) {
                if !v.is_zero() {
                    *o = o.clone() + c.clone() * v.clone();
                }
            }
        }
        GroupPoint { coords: out }
    }

    /// Dilation `delta_t`: layer `j` scaled by `t^j`.
    pub fn dilate<T: Scalar>(&self, t: T, a: &GroupPoint<T>) -> Result<GroupPoint<T>> {
        self.check_dim(a.coords.len())?;
        if !(t > T::zero()) {
            return param("dilation factor must be positive");
        }
        let mut coords = a.coords.clone();
        let mut scale = T::one();
        for j in 1..=self.step() {
            scale = scale * t.clone();
            for c in &mut coords[self.layer_range(j)] {
                *c = c.clone() * scale.clone();
            }
        }
        Ok(GroupPoint { coords })
    }

    /// Homogeneous norm `(sum_j |v_j|^(2 r!/j))^(1/(2 r!))` with Euclidean
    /// layer norms in Hall coordinates.
    pub fn homogeneous_norm<T: Scalar + Float>(&self, a: &GroupPoint<T>) -> Result<T> {
        self.check_dim(a.coords.len())?;
        let big = 2.0 * (1..=self.step()).product::<usize>() as f64;
        // Work with the j-th roots |v_j|^(1/j) so the large exponent is
        // applied to ratios no larger than one.
        let roots: Vec<T> = (1..=self.step())
            .map(|j| {
                let layer = &a.coords[self.layer_range(j)];
                let euclid = layer.iter().fold(T::zero(), |acc, &c| acc + c * c).sqrt();
                euclid.powf(T::from_ratio(1, j as i64))
            })
            .collect();
        let peak = roots.iter().fold(T::zero(), |m, &v| if v > m { v } else { m });
        if peak.is_zero() {
            return Ok(T::zero());
        }
        let big_t: T = num_traits::cast(big).unwrap();
        let sum = roots.iter().fold(T::zero(), |acc, &v| acc + (v / peak).powf(big_t));
        Ok(peak * sum.powf(big_t.recip()))
    }
}

fn nested<'w, T: Scalar>(
    s: &LieStructure,
    word: &'w [bool],
    x: &[T],
    y: &[T],
    memo: &mut HashMap<&'w [bool], Vec<T>>,
) -> Vec<T> {
    if let Some(v) = memo.get(word) {
        return v.clone();
    }
    let letter = |l: bool| if l { y.to_vec() } else { x.to_vec() };
    let value = if word.len() == 1 {
        letter(word[0])
    } else {
        let tail = nested(s, &word[1..], x, y, memo);
        s.bracket_unchecked(if word[0] { y } else { x }, &tail)
    };
    memo.insert(word, value.clone());
    value
}

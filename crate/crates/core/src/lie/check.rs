use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{build_free_nilpotent, commutator_word, evaluate_word, walk_constants, witt_dimension, GroupPoint};
use crate::error::Result;

#[derive(Debug, Clone, Serialize)]
pub struct LieCheckReport {
    pub p: usize,
    pub r: usize,
    pub dim: usize,
    pub layer_dims: Vec<usize>,
    /// Layer dimensions agree with the Witt formula.
    pub witt: bool,
    /// Jacobi holds exactly on every basis triple of total weight `<= r`.
    pub jacobi: bool,
    pub triples: usize,
    /// `max |(xy)z - x(yz)|` over random triples in `[-1, 1]^dim`.
    pub associativity: f64,
    pub b: Vec<usize>,
    pub p_steps: usize,
    /// `b_k = 3 2^(k-1) - 2` and `P = sum a_k b_k`.
    pub walk_closed_form: bool,
    /// The top-layer word for `[X_1, ..., X_r]` with `p >= 2` evaluates to the
    /// bracket scaled by the product of its parameters.
    pub top_word: bool,
}

impl LieCheckReport {
    pub fn passed(&self, assoc_tol: f64) -> bool {
        self.witt && self.jacobi && self.associativity <= assoc_tol && self.walk_closed_form && self.top_word
    }
}

/// Structural invariants of the free nilpotent algebra `(p, r)`.
pub fn lie_check(p: usize, r: usize, triples: usize, seed: u64) -> Result<LieCheckReport> {
    let s = build_free_nilpotent(p, r)?;
    let d = s.dim();
    let layer_dims = s.layer_dims();
    let witt = layer_dims.iter().enumerate().all(|(j, &a)| a == witt_dimension(p, j + 1));

    // sparse integer expansion of [a, v] for v = sum v_g e_g
    let bracket_with = |a: usize, v: &[(usize, i64)]| {
        let mut out = vec![0i64; d];
        for &(g, c) in v {
            for &(k, e) in s.bracket_basis(a, g) {
                out[k] += c * e;
            }
        }
        out
    };
    let mut jacobi = true;
    for a in 0..d {
        for b in 0..d {
            for c in 0..d {
                if s.weight(a) + s.weight(b) + s.weight(c) > r {
                    continue;
                }
                let j1 = bracket_with(a, s.bracket_basis(b, c));
                let j2 = bracket_with(b, s.bracket_basis(c, a));
                let j3 = bracket_with(c, s.bracket_basis(a, b));
                jacobi &= (0..d).all(|k| j1[k] + j2[k] + j3[k] == 0);
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut associativity = 0.0f64;
    for _ in 0..triples {
        let mut draw = || GroupPoint::new((0..d).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<f64>>());
        let (x, y, z) = (draw(), draw(), draw());
        let left = s.group_product(&s.group_product(&x, &y)?, &z)?;
        let right = s.group_product(&x, &s.group_product(&y, &z)?)?;
        let err = left.coords.iter().zip(&right.coords).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        associativity = associativity.max(err);
    }

    let walk = walk_constants(&s);
    let walk_closed_form = walk.b.iter().enumerate().all(|(k, &b)| b == 3 * (1 << k) - 2)
        && walk.p_steps == layer_dims.iter().zip(&walk.b).map(|(a, b)| a * b).sum::<usize>();

    let top_word = if p >= 2 && r >= 2 {
        let alpha: Vec<usize> = (0..r).map(|i| i % 2).collect();
        let t: Vec<f64> = (0..r).map(|i| 0.5 + 0.25 * i as f64).collect();
        let g = evaluate_word(&s, &commutator_word(&s, &alpha)?, &t)?;
        let br: Vec<f64> = s.nested_generator_bracket(&alpha)?;
        let scale: f64 = t.iter().product();
        let top = s.layer_range(r);
        g.coords.iter().enumerate().all(|(i, &v)| {
            let want = if top.contains(&i) { br[i] * scale } else { 0.0 };
            (v - want).abs() <= 1e-12 * (1.0 + want.abs())
        })
    } else {
        true
    };

    Ok(LieCheckReport {
        p,
        r,
        dim: d,
        layer_dims,
        witt,
        jacobi,
        triples,
        associativity,
        b: walk.b,
        p_steps: walk.p_steps,
        walk_closed_form,
        top_word,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heisenberg_passes() {
        let r = lie_check(2, 2, 20, 1).unwrap();
        assert_eq!(r.layer_dims, vec![2, 1]);
        assert_eq!(r.p_steps, 6);
        assert!(r.passed(1e-12));
    }

    #[test]
    fn larger_algebras_pass() {
        for (p, r) in [(1, 1), (3, 3), (2, 5)] {
            assert!(lie_check(p, r, 10, 2).unwrap().passed(1e-11), "p={p} r={r}");
        }
    }
}

use rand::Rng;

use super::{GroupPoint, LieStructure};
use crate::error::{param, Result};

/// Combinatorial constants of the minorization argument.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkConstants {
    /// `b_1..b_r` with `b_1 = 1`, `b_{n+1} = 2 b_n + 2`.
    pub b: Vec<usize>,
    /// `P = sum_r a_r b_r`, the number of walk steps in the minorization.
    pub p_steps: usize,
    pub dim: usize,
    pub homogeneous_dim: usize,
}

pub fn walk_constants(s: &LieStructure) -> WalkConstants {
    let mut b = Vec::with_capacity(s.step());
    let mut cur = 1;
    for _ in 0..s.step() {
        b.push(cur);
        cur = 2 * cur + 2;
    }
    let p_steps = s.layer_dims().iter().zip(&b).map(|(a, b)| a * b).sum();
    WalkConstants { b, p_steps, dim: s.dim(), homogeneous_dim: s.homogeneous_dim() }
}

/// Uniform sample of the box `I_{eps,h}`: coordinate `u_a` uniform in
/// `(-eps h^|a|, eps h^|a|)`.
pub fn sample_box<R: Rng + ?Sized>(s: &LieStructure, eps: f64, h: f64, rng: &mut R) -> Result<GroupPoint<f64>> {
    check_box(eps, h)?;
    Ok(GroupPoint::new(
        (0..s.dim())
            .map(|i| {
                let half = eps * h.powi(s.weight(i) as i32);
                half * (2.0 * rng.random::<f64>() - 1.0)
            })
            .collect(),
    ))
}

/// Monte Carlo estimate of `h^-Q vol(I_{eps,h})` with its standard error.
///
/// Points are drawn in the reference box of half-widths
/// `max(eps, 1) h^|a|` and the hit fraction is scaled by its volume.
pub fn box_volume_mc<R: Rng + ?Sized>(
    s: &LieStructure,
    eps: f64,
    h: f64,
    draws: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    check_box(eps, h)?;
    if draws == 0 {
        return param("at least one draw is required");
    }
    let reference = eps.max(1.0);
    let mut hits = 0usize;
    for _ in 0..draws {
        let inside = (0..s.dim()).all(|i| {
            let scale = h.powi(s.weight(i) as i32);
            let u = reference * scale * (2.0 * rng.random::<f64>() - 1.0);
            u.abs() < eps * scale
        });
        hits += inside as usize;
    }
    let frac = hits as f64 / draws as f64;
    // h^-Q cancels against the h-scaling of the reference box
    let volume = (2.0 * reference).powi(s.dim() as i32);
    let stderr = volume * (frac * (1.0 - frac) / draws as f64).sqrt();
    Ok((volume * frac, stderr))
}

fn check_box(eps: f64, h: f64) -> Result<()> {
    if !(eps > 0.0) {
        return param("box size eps must be positive");
    }
    if !(h > 0.0 && h <= 1.0) {
        return param("scale h must lie in (0, 1]");
    }
    Ok(())
}

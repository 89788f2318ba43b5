//! Reference oracles computed independently of the library's own arithmetic.
#![allow(dead_code)]

use negproj_core::toyworld::{Condition, ToyWorld};
use rand::Rng;
use rand_distr::StandardNormal;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn gaussian_vec<R: Rng>(rng: &mut R, d: usize, scale: f64) -> Vec<f64> {
    (0..d).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Single half-space QP by bisection on the multiplier.
///
/// Minimises `½‖δ − δ_ref‖²` subject to `aᵀδ ≤ b`; the stationarity condition
/// `δ = δ_ref − λa` leaves the scalar root `aᵀ(δ_ref − λa) = b`, which is
/// bracketed and bisected instead of solved in closed form.
pub fn qp_single(dref: &[f64], a: &[f64], b: f64) -> (Vec<f64>, f64) {
    let g = |lam: f64| dref.iter().zip(a).map(|(d, ai)| (d - lam * ai) * ai).sum::<f64>() - b;
    if g(0.0) <= 0.0 {
        return (dref.to_vec(), 0.0);
    }
    let mut hi = 1.0;
    while g(hi) > 0.0 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lam = 0.5 * (lo + hi);
    (dref.iter().zip(a).map(|(d, ai)| d - lam * ai).collect(), lam)
}

/// Hildreth's dual coordinate ascent for `min ½‖δ − δ_ref‖²` s.t. `Aδ ≤ b`.
pub fn qp_hildreth(dref: &[f64], normals: &[Vec<f64>], bounds: &[f64], sweeps: usize) -> Vec<f64> {
    let mut lam = vec![0.0; normals.len()];
    let mut x = dref.to_vec();
    for _ in 0..sweeps {
        for (i, a) in normals.iter().enumerate() {
            let nn = dot(a, a);
            if nn == 0.0 {
                continue;
            }
            let step = (dot(a, &x) - bounds[i]) / nn;
            let new = (lam[i] + step).max(0.0);
            let change = new - lam[i];
            lam[i] = new;
            for (xj, aj) in x.iter_mut().zip(a) {
                *xj -= change * aj;
            }
        }
    }
    x
}

/// Largest constraint violation `max(0, aᵀδ − b)`.
pub fn max_violation(x: &[f64], normals: &[Vec<f64>], bounds: &[f64]) -> f64 {
    normals
        .iter()
        .zip(bounds)
        .map(|(a, b)| (dot(a, x) - b).max(0.0))
        .fold(0.0, f64::max)
}

/// Mixture log-density at noise level `abar`, written out term by term.
pub fn mixture_log_density(world: &ToyWorld, cond: &Condition, x: &[f64], abar: f64) -> f64 {
    let var = (1.0 - abar) + abar * world.variance;
    let d = x.len() as f64;
    let sel: Vec<_> = world
        .components
        .iter()
        .filter(|c| match cond {
            Condition::All => true,
            Condition::Tags(t) => c.tags.iter().any(|g| t.contains(g)),
        })
        .collect();
    let total: f64 = sel.iter().map(|c| c.weight).sum();
    let logs: Vec<f64> = sel
        .iter()
        .map(|c| {
            let r2: f64 = x.iter().zip(&c.mean).map(|(xi, m)| (xi - abar.sqrt() * m).powi(2)).sum();
            (c.weight / total).ln() - 0.5 * d * (2.0 * std::f64::consts::PI * var).ln() - 0.5 * r2 / var
        })
        .collect();
    let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + logs.iter().map(|l| (l - m).exp()).sum::<f64>().ln()
}

/// `−√(1 − ᾱ) ∇ log p` by central differences of [`mixture_log_density`].
pub fn fd_noise_pred(world: &ToyWorld, cond: &Condition, x: &[f64], abar: f64, h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[i] += h;
            xm[i] -= h;
            let g = (mixture_log_density(world, cond, &xp, abar) - mixture_log_density(world, cond, &xm, abar)) / (2.0 * h);
            -(1.0 - abar).sqrt() * g
        })
        .collect()
}

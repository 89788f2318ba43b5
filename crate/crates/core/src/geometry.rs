//! Half-space feasibility for guidance increments.
//!
//! A [`HalfSpace`] `{δ : aᵀδ ≤ b}` bounds how far a guidance increment may move
//! along a negation direction. [`project_halfspace`] is the closed-form
//! minimal-energy correction, [`project_sequential`] handles several constraints
//! with Dykstra-corrected cyclic projections, and [`project_exact`] enumerates
//! active sets. The last one is a test oracle and is not on the sampling path.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::GeometryError;
use crate::vector::GuidanceVec;

/// Numerical stabilization constant; normals shorter than this are skipped.
pub const DEFAULT_EPS_NUM: f64 = 1e-8;

/// Default number of full cycles for [`project_sequential`].
pub const DEFAULT_PASSES: usize = 8;

/// Largest constraint count accepted by [`project_exact`].
pub const MAX_EXACT_CONSTRAINTS: usize = 8;

/// Feasibility slack used throughout: `1e-9 · (1 + |b|)`.
pub fn feasibility_tolerance(bound: f64) -> f64 {
    1e-9 * (1.0 + bound.abs())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfSpace {
    pub normal: GuidanceVec,
    pub bound: f64,
}

impl HalfSpace {
    pub fn new(normal: GuidanceVec, bound: f64) -> Self {
        Self { normal, bound }
    }

    pub fn dim(&self) -> usize {
        self.normal.dim()
    }

    fn check_finite(&self) -> Result<(), GeometryError> {
        if !self.normal.is_finite() {
            return Err(GeometryError::NonFinite("half-space normal"));
        }
        if !self.bound.is_finite() {
            return Err(GeometryError::NonFinite("half-space bound"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionResult {
    pub corrected: GuidanceVec,
    /// KKT multiplier; zero whenever the constraint was not enforced.
    pub multiplier: f64,
    pub active: bool,
    /// Set when the normal was shorter than `eps_num` and projection was skipped.
    pub degenerate: bool,
}

/// `aᵀδ − b`; positive iff `delta` is infeasible.
pub fn violation(h: &HalfSpace, delta: &GuidanceVec) -> Result<f64, GeometryError> {
    Ok(h.normal.dot(delta)? - h.bound)
}

/// Minimal-energy projection of `delta_ref` onto a single half-space.
///
/// Solves `min ½‖δ − δ_ref‖²  s.t.  aᵀδ ≤ b` in closed form:
/// `δ* = δ_ref − λa` with `λ = max(0, aᵀδ_ref − b) / ‖a‖²`. When the constraint
/// is already satisfied the input is returned unchanged (bitwise) with `λ = 0`.
pub fn project_halfspace(
    delta_ref: &GuidanceVec,
    h: &HalfSpace,
    eps_num: f64,
) -> Result<ProjectionResult, GeometryError> {
    if !(eps_num > 0.0) {
        return Err(GeometryError::InvalidArgument(format!(
            "eps_num must be positive, got {eps_num}"
        )));
    }
    if !delta_ref.is_finite() {
        return Err(GeometryError::NonFinite("reference increment"));
    }
    h.check_finite()?;
    delta_ref.check_dim(&h.normal)?;

    let norm_sq = h.normal.norm_sq();
    if norm_sq.sqrt() < eps_num {
        return Ok(ProjectionResult {
            corrected: delta_ref.clone(),
            multiplier: 0.0,
            active: false,
            degenerate: true,
        });
    }

    let excess = h.normal.dot(delta_ref)? - h.bound;
    if excess <= 0.0 {
        return Ok(ProjectionResult {
            corrected: delta_ref.clone(),
            multiplier: 0.0,
            active: false,
            degenerate: false,
        });
    }

    let multiplier = excess / norm_sq;
    Ok(ProjectionResult {
        corrected: delta_ref.sub_scaled(multiplier, &h.normal)?,
        multiplier,
        active: true,
        degenerate: false,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequentialResult {
    pub corrected: GuidanceVec,
    /// Per-constraint multiplier from the final cycle (`p_k = λ_k a_k`).
    pub multipliers: Vec<f64>,
    pub active: Vec<bool>,
    pub degenerate: Vec<bool>,
    /// Per-constraint `max(0, aᵀδ − b)` at the returned iterate.
    pub residuals: Vec<f64>,
    /// Largest entry of `residuals`.
    pub max_residual: f64,
}

/// Cyclic projection onto an intersection of half-spaces.
///
/// Each cycle visits the constraints in order and applies [`project_halfspace`]
/// to the current iterate plus that constraint's Dykstra increment, so the
/// iterates converge to the minimal-energy point of the intersection rather
/// than an arbitrary feasible point. Degenerate normals are skipped throughout.
/// The iterate after `passes` cycles is returned with its residual violation.
pub fn project_sequential(
    delta_ref: &GuidanceVec,
    hs: &[HalfSpace],
    passes: usize,
    eps_num: f64,
) -> Result<SequentialResult, GeometryError> {
    if passes == 0 {
        return Err(GeometryError::InvalidArgument(
            "passes must be at least 1".into(),
        ));
    }
    for h in hs {
        delta_ref.check_dim(&h.normal)?;
    }

    if let [single] = hs {
        let r = project_halfspace(delta_ref, single, eps_num)?;
        let residual = if r.degenerate {
            violation(single, &r.corrected)?.max(0.0)
        } else {
            0.0
        };
        return Ok(SequentialResult {
            corrected: r.corrected,
            multipliers: vec![r.multiplier],
            active: vec![r.active],
            degenerate: vec![r.degenerate],
            residuals: vec![residual],
            max_residual: residual,
        });
    }

    let m = hs.len();
    let mut x = delta_ref.clone();
    let mut multipliers = vec![0.0; m];
    let mut active = vec![false; m];
    let mut degenerate = vec![false; m];

    if m > 0 {
        for _ in 0..passes {
            for (k, h) in hs.iter().enumerate() {
                // Undo this constraint's previous correction before re-projecting.
                let y = if multipliers[k] > 0.0 {
                    x.sub_scaled(-multipliers[k], &h.normal)?
                } else {
                    x
                };
                let r = project_halfspace(&y, h, eps_num)?;
                multipliers[k] = r.multiplier;
                active[k] = r.active;
                degenerate[k] = r.degenerate;
                x = r.corrected;
            }
        }
    }

    let residuals = hs
        .iter()
        .map(|h| violation(h, &x).map(|v| v.max(0.0)))
        .collect::<Result<Vec<_>, _>>()?;
    let max_residual = residuals.iter().copied().fold(0.0, f64::max);
    Ok(SequentialResult {
        corrected: x,
        multipliers,
        active,
        degenerate,
        residuals,
        max_residual,
    })
}

/// Exact Euclidean projection onto `∩ {aᵢᵀδ ≤ bᵢ}` by active-set enumeration.
///
/// Every subset of constraints is treated as an equality system; the projection
/// of `delta_ref` onto each affine subspace is a candidate, and the closest
/// candidate satisfying all constraints is the answer. Test oracle only; cost
/// is exponential in the constraint count.
pub fn project_exact(
    delta_ref: &GuidanceVec,
    hs: &[HalfSpace],
) -> Result<GuidanceVec, GeometryError> {
    if hs.len() > MAX_EXACT_CONSTRAINTS {
        return Err(GeometryError::TooManyConstraints {
            max: MAX_EXACT_CONSTRAINTS,
            got: hs.len(),
        });
    }
    if !delta_ref.is_finite() {
        return Err(GeometryError::NonFinite("reference increment"));
    }
    for h in hs {
        h.check_finite()?;
        delta_ref.check_dim(&h.normal)?;
    }

    let all: u32 = (1u32 << hs.len()) - 1;
    if let Some(best) = best_candidate(delta_ref, hs, all) {
        return Ok(best);
    }

    // Name the smallest conflicting subset.
    let mut masks: Vec<u32> = (1..=all).filter(|m| m & !all == 0).collect();
    masks.sort_by_key(|m| (m.count_ones(), *m));
    let conflicting = masks
        .into_iter()
        .find(|&mask| best_candidate(delta_ref, hs, mask).is_none())
        .unwrap_or(all);
    Err(GeometryError::Infeasible {
        conflicting: indices(conflicting),
    })
}

fn indices(mask: u32) -> Vec<usize> {
    (0..32).filter(|i| mask & (1 << i) != 0).collect()
}

fn satisfies(hs: &[HalfSpace], mask: u32, x: &GuidanceVec) -> bool {
    indices(mask).into_iter().all(|i| {
        let h = &hs[i];
        let slack = 1e-9 * (1.0 + h.bound.abs() + h.normal.norm() * x.norm());
        h.normal.as_slice().iter().zip(x.as_slice()).map(|(a, v)| a * v).sum::<f64>()
            <= h.bound + slack
    })
}

/// Closest feasible candidate over all active subsets of `mask`.
fn best_candidate(delta_ref: &GuidanceVec, hs: &[HalfSpace], mask: u32) -> Option<GuidanceVec> {
    let mut best: Option<(f64, GuidanceVec)> = None;
    let mut subset = 0u32;
    loop {
        if let Some(x) = affine_projection(delta_ref, hs, subset) {
            if satisfies(hs, mask, &x) {
                let dist = delta_ref.distance(&x).unwrap_or(f64::INFINITY);
                if best.as_ref().is_none_or(|(d, _)| dist < *d) {
                    best = Some((dist, x));
                }
            }
        }
        if subset == mask {
            break;
        }
        // Next subset of `mask` in increasing order.
        subset = (subset.wrapping_sub(mask)) & mask;
    }
    best.map(|(_, x)| x)
}

/// Projection of `delta_ref` onto `{aᵢᵀδ = bᵢ, i ∈ subset}`, or `None` when the
/// equality system is singular or inconsistent.
fn affine_projection(delta_ref: &GuidanceVec, hs: &[HalfSpace], subset: u32) -> Option<GuidanceVec> {
    let idx = indices(subset);
    match idx.as_slice() {
        [] => Some(delta_ref.clone()),
        [i] => {
            let h = &hs[*i];
            let norm_sq = h.normal.norm_sq();
            if norm_sq == 0.0 {
                return None;
            }
            let mu = (h.normal.dot(delta_ref).ok()? - h.bound) / norm_sq;
            delta_ref.sub_scaled(mu, &h.normal).ok()
        }
        _ => {
            let k = idx.len();
            let gram = DMatrix::from_fn(k, k, |r, c| {
                hs[idx[r]].normal.dot(&hs[idx[c]].normal).unwrap_or(f64::NAN)
            });
            let rhs = DVector::from_fn(k, |r, _| {
                let h = &hs[idx[r]];
                h.normal.dot(delta_ref).unwrap_or(f64::NAN) - h.bound
            });
            let mu = gram.cholesky()?.solve(&rhs);
            let mut x = delta_ref.clone();
            for (r, &i) in idx.iter().enumerate() {
                x = x.sub_scaled(mu[r], &hs[i].normal).ok()?;
            }
            // Reject near-singular systems whose solution misses the subspace.
            let consistent = idx.iter().all(|&i| {
                let h = &hs[i];
                let scale = 1.0 + h.bound.abs() + h.normal.norm() * x.norm();
                (h.normal.dot(&x).unwrap_or(f64::NAN) - h.bound).abs() <= 1e-7 * scale
            });
            (consistent && x.is_finite()).then_some(x)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> GuidanceVec {
        GuidanceVec::new(xs.to_vec())
    }

    fn hs(a: &[f64], b: f64) -> HalfSpace {
        HalfSpace::new(v(a), b)
    }

    #[test]
    fn violation_examples() {
        assert_eq!(violation(&hs(&[1.0, 0.0], 1.0), &v(&[3.0, 1.0])).unwrap(), 2.0);
        assert_eq!(violation(&hs(&[1.0, 0.0], 1.0), &v(&[1.0, 0.0])).unwrap(), 0.0);
        assert_eq!(violation(&hs(&[0.0, 1.0], 0.0), &v(&[5.0, -2.0])).unwrap(), -2.0);
    }

    #[test]
    fn violation_dimension_mismatch() {
        let err = violation(&hs(&[1.0, 0.0], 1.0), &v(&[1.0, 0.0, 0.0])).unwrap_err();
        assert!(matches!(err, GeometryError::Dimension(_)));
    }

    #[test]
    fn active_projection() {
        let r = project_halfspace(&v(&[3.0, 1.0]), &hs(&[1.0, 0.0], 1.0), DEFAULT_EPS_NUM).unwrap();
        assert_eq!(r.corrected, v(&[1.0, 1.0]));
        assert_eq!(r.multiplier, 2.0);
        assert!(r.active);
    }

    #[test]
    fn inactive_projection_is_identity() {
        let d = v(&[3.0, 1.0]);
        let r = project_halfspace(&d, &hs(&[1.0, 0.0], 5.0), DEFAULT_EPS_NUM).unwrap();
        assert_eq!(r.corrected, d);
        assert_eq!(r.multiplier, 0.0);
        assert!(!r.active);
    }

    #[test]
    fn degenerate_normal_is_skipped() {
        let d = v(&[3.0, -7.0]);
        let r = project_halfspace(&d, &hs(&[1e-9, 0.0], -100.0), 1e-8).unwrap();
        assert_eq!(r.corrected, d);
        assert_eq!(r.multiplier, 0.0);
        assert!(!r.active);
        assert!(r.degenerate);
    }

    #[test]
    fn non_finite_rejected() {
        let err = project_halfspace(&v(&[f64::NAN, 0.0]), &hs(&[1.0, 0.0], 0.0), 1e-8).unwrap_err();
        assert_eq!(err, GeometryError::NonFinite("reference increment"));
        let err = project_halfspace(&v(&[0.0, 0.0]), &hs(&[1.0, 0.0], f64::INFINITY), 1e-8).unwrap_err();
        assert_eq!(err, GeometryError::NonFinite("half-space bound"));
        assert!(project_halfspace(&v(&[0.0]), &hs(&[1.0], 0.0), 0.0).is_err());
    }

    #[test]
    fn sequential_single_matches_closed_form() {
        let d = v(&[3.0, 1.0]);
        let h = hs(&[1.0, 0.5], 0.3);
        let one = project_halfspace(&d, &h, DEFAULT_EPS_NUM).unwrap();
        for passes in [1, 2, 8, 50] {
            let seq = project_sequential(&d, std::slice::from_ref(&h), passes, DEFAULT_EPS_NUM).unwrap();
            assert_eq!(seq.corrected, one.corrected);
            assert_eq!(seq.multipliers, vec![one.multiplier]);
        }
    }

    #[test]
    fn sequential_orthogonal_one_pass() {
        let r = project_sequential(
            &v(&[2.0, 3.0]),
            &[hs(&[1.0, 0.0], 0.0), hs(&[0.0, 1.0], 0.0)],
            1,
            DEFAULT_EPS_NUM,
        )
        .unwrap();
        assert_eq!(r.corrected, v(&[0.0, 0.0]));
        assert_eq!(r.max_residual, 0.0);
        assert_eq!(r.multipliers, vec![2.0, 3.0]);
    }

    #[test]
    fn sequential_non_orthogonal_converges_to_exact() {
        let d = v(&[2.0, 3.0]);
        let cons = [hs(&[1.0, 0.0], 0.0), hs(&[1.0, 1.0], 1.0)];
        let exact = project_exact(&d, &cons).unwrap();
        let seq = project_sequential(&d, &cons, 32, DEFAULT_EPS_NUM).unwrap();
        assert!(seq.corrected.distance(&exact).unwrap() < 1e-6);
        assert!(seq.max_residual < 1e-6);
    }

    #[test]
    fn sequential_rejects_zero_passes() {
        assert!(project_sequential(&v(&[1.0]), &[hs(&[1.0], 0.0)], 0, 1e-8).is_err());
    }

    #[test]
    fn sequential_empty_is_identity() {
        let d = v(&[1.0, -2.0]);
        let r = project_sequential(&d, &[], 3, 1e-8).unwrap();
        assert_eq!(r.corrected, d);
        assert_eq!(r.max_residual, 0.0);
    }

    #[test]
    fn exact_single_matches_closed_form_bitwise() {
        let d = v(&[0.3, -1.7, 2.2]);
        let h = hs(&[0.9, 0.1, 1.3], -0.4);
        let closed = project_halfspace(&d, &h, DEFAULT_EPS_NUM).unwrap();
        let exact = project_exact(&d, std::slice::from_ref(&h)).unwrap();
        assert_eq!(exact, closed.corrected);
    }

    #[test]
    fn exact_reports_conflict() {
        let err = project_exact(
            &v(&[0.5, 0.0]),
            &[hs(&[0.0, 1.0], 5.0), hs(&[1.0, 0.0], 0.0), hs(&[-1.0, 0.0], -1.0)],
        )
        .unwrap_err();
        assert_eq!(err, GeometryError::Infeasible { conflicting: vec![1, 2] });
    }

    #[test]
    fn exact_handles_parallel_duplicates() {
        let d = v(&[3.0, 0.0]);
        let cons = [hs(&[1.0, 0.0], 1.0), hs(&[2.0, 0.0], 2.0)];
        let x = project_exact(&d, &cons).unwrap();
        assert!(x.distance(&v(&[1.0, 0.0])).unwrap() < 1e-12);
    }

    #[test]
    fn exact_rejects_too_many() {
        let cons = vec![hs(&[1.0], 1.0); 9];
        assert!(matches!(
            project_exact(&v(&[0.0]), &cons),
            Err(GeometryError::TooManyConstraints { max: 8, got: 9 })
        ));
    }
}

mod common;

use common::*;
use negproj_core::geometry::{
    feasibility_tolerance, project_exact, project_halfspace, project_sequential, HalfSpace, DEFAULT_EPS_NUM,
};
use negproj_core::rng::stream_rng;
use negproj_core::GuidanceVec;
use proptest::prelude::*;
use rand::Rng;

fn hs(a: &[f64], b: f64) -> HalfSpace {
    HalfSpace::new(GuidanceVec::new(a.to_vec()), b)
}

#[test]
fn closed_form_matches_bisection_oracle() {
    for d in [2usize, 16, 256] {
        let mut rng = stream_rng(11, "geometry/oracle", d as u64);
        for _ in 0..1000 {
            let a = gaussian_vec(&mut rng, d, 1.0);
            let dref = gaussian_vec(&mut rng, d, 3.0);
            let b = rng.random_range(-2.0..2.0);
            let r = project_halfspace(&GuidanceVec::new(dref.clone()), &hs(&a, b), DEFAULT_EPS_NUM).unwrap();
            let (oracle, lam) = qp_single(&dref, &a, b);
            let rel = dist(r.corrected.as_slice(), &oracle) / (1.0 + norm(&oracle));
            assert!(rel < 1e-8, "d={d} rel={rel}");
            assert!((r.multiplier - lam).abs() <= 1e-8 * (1.0 + lam));
        }
    }
}

#[test]
fn projection_beats_random_feasible_points() {
    for d in [2usize, 16, 256] {
        let mut rng = stream_rng(12, "geometry/feasible", d as u64);
        for _ in 0..50 {
            let a = gaussian_vec(&mut rng, d, 1.0);
            let dref = gaussian_vec(&mut rng, d, 3.0);
            let b = rng.random_range(-2.0..2.0);
            let h = hs(&a, b);
            let p = project_halfspace(&GuidanceVec::new(dref.clone()), &h, DEFAULT_EPS_NUM).unwrap();
            let best = dist(p.corrected.as_slice(), &dref);
            let mut tried = 0;
            while tried < 1000 {
                let cand: Vec<f64> = dref.iter().map(|x| x + rng.random_range(-1.0..1.0) * (best + 1.0)).collect();
                if dot(&a, &cand) > b {
                    continue;
                }
                tried += 1;
                assert!(best <= dist(&cand, &dref) + 1e-12);
            }
        }
    }
}

#[test]
fn exact_projection_matches_hildreth() {
    let mut rng = stream_rng(13, "geometry/exact", 0);
    for m in 1..=4usize {
        for _ in 0..200 {
            let d = rng.random_range(m..=6);
            let normals: Vec<Vec<f64>> = (0..m).map(|_| gaussian_vec(&mut rng, d, 1.0)).collect();
            let bounds: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..1.0)).collect();
            let dref = gaussian_vec(&mut rng, d, 4.0);
            let h: Vec<HalfSpace> = normals.iter().zip(&bounds).map(|(a, b)| hs(a, *b)).collect();
            let exact = project_exact(&GuidanceVec::new(dref.clone()), &h).unwrap();
            let oracle = qp_hildreth(&dref, &normals, &bounds, 20_000);
            assert!(max_violation(&oracle, &normals, &bounds) < 1e-10);
            assert!(dist(exact.as_slice(), &oracle) < 1e-6, "m={m} d={d}");
        }
    }
}

#[test]
fn exact_projection_is_closest_feasible_point() {
    let mut rng = stream_rng(14, "geometry/rejection", 0);
    for _ in 0..20 {
        let normals: Vec<Vec<f64>> = (0..3).map(|_| gaussian_vec(&mut rng, 3, 1.0)).collect();
        let bounds = vec![0.5, 0.5, 0.5];
        let dref = gaussian_vec(&mut rng, 3, 3.0);
        let h: Vec<HalfSpace> = normals.iter().zip(&bounds).map(|(a, b)| hs(a, *b)).collect();
        let exact = project_exact(&GuidanceVec::new(dref.clone()), &h).unwrap();
        let best = dist(exact.as_slice(), &dref);
        let mut found = 0;
        while found < 10_000 {
            let cand: Vec<f64> = dref.iter().map(|x| x + rng.random_range(-1.0..1.0) * (best + 1.0)).collect();
            if max_violation(&cand, &normals, &bounds) > 0.0 {
                continue;
            }
            found += 1;
            assert!(best <= dist(&cand, &dref) + 1e-9);
        }
    }
}

#[test]
fn sequential_reaches_exact_for_oblique_pairs() {
    let mut rng = stream_rng(15, "geometry/sequential", 0);
    for _ in 0..200 {
        let normals: Vec<Vec<f64>> = (0..2).map(|_| gaussian_vec(&mut rng, 4, 1.0)).collect();
        let c = dot(&normals[0], &normals[1]) / (norm(&normals[0]) * norm(&normals[1]));
        if c.abs() > 0.5 {
            continue;
        }
        let bounds = vec![0.0, 0.0];
        let dref = gaussian_vec(&mut rng, 4, 4.0);
        let h: Vec<HalfSpace> = normals.iter().zip(&bounds).map(|(a, b)| hs(a, *b)).collect();
        let g = GuidanceVec::new(dref);
        let seq = project_sequential(&g, &h, 32, DEFAULT_EPS_NUM).unwrap();
        let exact = project_exact(&g, &h).unwrap();
        assert!(seq.corrected.distance(&exact).unwrap() < 1e-6);
    }
}

fn vec_strategy(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, d)
}

fn instance() -> impl Strategy<Value = (Vec<f64>, f64, Vec<f64>, Vec<f64>)> {
    (1usize..12).prop_flat_map(|d| (vec_strategy(d), -5.0f64..5.0, vec_strategy(d), vec_strategy(d)))
}

proptest! {
    #[test]
    fn feasible_idempotent_and_bounded((a, b, u, _v) in instance()) {
        prop_assume!(norm(&a) >= 1e-3);
        let h = hs(&a, b);
        let ug = GuidanceVec::new(u.clone());
        let p = project_halfspace(&ug, &h, DEFAULT_EPS_NUM).unwrap();
        prop_assert!(dot(&a, p.corrected.as_slice()) <= b + feasibility_tolerance(b));
        let pp = project_halfspace(&p.corrected, &h, DEFAULT_EPS_NUM).unwrap();
        prop_assert!(pp.corrected.distance(&p.corrected).unwrap() <= 1e-12 * (1.0 + p.corrected.norm()));
        let gap = (dot(&a, &u) - b).abs() / norm(&a);
        let moved = dist(p.corrected.as_slice(), &u);
        prop_assert!(moved <= gap + 1e-9);
        prop_assert!((moved - p.multiplier * norm(&a)).abs() <= 1e-9 * (1.0 + moved));
        if p.active {
            prop_assert!((moved - gap).abs() <= 1e-9 * (1.0 + gap));
        }
        if dot(&a, &u) <= b {
            prop_assert_eq!(p.multiplier, 0.0);
            prop_assert_eq!(p.corrected.as_slice(), u.as_slice());
        }
    }

    #[test]
    fn non_expansive((a, b, u, v) in instance()) {
        let h = hs(&a, b);
        let pu = project_halfspace(&GuidanceVec::new(u.clone()), &h, DEFAULT_EPS_NUM).unwrap();
        let pv = project_halfspace(&GuidanceVec::new(v.clone()), &h, DEFAULT_EPS_NUM).unwrap();
        prop_assert!(pu.corrected.distance(&pv.corrected).unwrap() <= dist(&u, &v) + 1e-12);
    }
}

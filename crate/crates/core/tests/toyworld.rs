mod common;

use std::collections::BTreeSet;

use common::*;
use negproj_core::compiler::{compile_prompt, ConceptLexicon};
use negproj_core::engine::EngineConfig;
use negproj_core::rng::stream_rng;
use negproj_core::scheduler::Progress;
use negproj_core::toyworld::{sample, templates, Component, Condition, GuidancePlan, NoiseSchedule, SamplerOptions, ToyWorld};
use rand::Rng;

fn random_world<R: Rng>(rng: &mut R) -> ToyWorld {
    let d = rng.random_range(1..=5);
    let k = rng.random_range(1..=5);
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let comps = raw
        .iter()
        .enumerate()
        .map(|(i, w)| Component {
            mean: gaussian_vec(rng, d, 3.0),
            weight: w / total,
            tags: BTreeSet::from([format!("c{}", i % 2)]),
        })
        .collect();
    ToyWorld::new(comps, Some(rng.random_range(0.05..1.0)), NoiseSchedule::default()).unwrap()
}

#[test]
fn noise_prediction_matches_finite_differences() {
    let mut rng = stream_rng(21, "toyworld/fd", 0);
    for _ in 0..100 {
        let w = random_world(&mut rng);
        let s = Progress::new(rng.random_range(0.0..0.95)).unwrap();
        let abar = w.schedule.abar(s);
        let x = gaussian_vec(&mut rng, w.dim, 2.0);
        let cond = if rng.random_bool(0.5) {
            Condition::All
        } else {
            Condition::tags(["c0"])
        };
        let eps = w.noise_pred(&cond, &x, s).unwrap();
        let fd = fd_noise_pred(&w, &cond, &x, abar, 1e-5);
        let err = dist(eps.as_slice(), &fd);
        assert!(err <= 1e-4 * norm(&fd).max(1e-3), "err={err} |fd|={}", norm(&fd));
    }
}

#[test]
fn single_gaussian_closed_form() {
    let mut rng = stream_rng(22, "toyworld/single", 0);
    for _ in 0..50 {
        let mu = gaussian_vec(&mut rng, 3, 2.0);
        let nu = rng.random_range(0.1..1.0);
        let w = ToyWorld::new(
            vec![Component {
                mean: mu.clone(),
                weight: 1.0,
                tags: BTreeSet::new(),
            }],
            Some(nu),
            NoiseSchedule::default(),
        )
        .unwrap();
        let s = Progress::new(rng.random_range(0.0..1.0)).unwrap();
        let a = w.schedule.abar(s);
        let x = gaussian_vec(&mut rng, 3, 2.0);
        let eps = w.noise_pred(&Condition::All, &x, s).unwrap();
        let var = (1.0 - a) + a * nu;
        for i in 0..3 {
            let expect = (x[i] - a.sqrt() * mu[i]) * (1.0 - a).sqrt() / var;
            assert!((eps[i] - expect).abs() <= 1e-10 * (1.0 + expect.abs()));
        }
    }
}

#[test]
fn classify_matches_direct_density_comparison() {
    let mut rng = stream_rng(23, "toyworld/classify", 0);
    for _ in 0..200 {
        let w = random_world(&mut rng);
        let x = gaussian_vec(&mut rng, w.dim, 3.0);
        let c = w.classify(&x).unwrap();
        let scores: Vec<f64> = w
            .components
            .iter()
            .map(|comp| {
                let r2: f64 = x.iter().zip(&comp.mean).map(|(a, m)| (a - m).powi(2)).sum();
                comp.weight.ln() - 0.5 * r2 / w.variance
            })
            .collect();
        let best = (0..scores.len()).max_by(|&i, &j| scores[i].total_cmp(&scores[j])).unwrap();
        assert_eq!(c.component, best);
        let total: f64 = c.responsibilities.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}

#[test]
fn single_component_samples_land_near_the_mean() {
    let mu = vec![1.5, -2.0];
    let nu = 0.2;
    let w = ToyWorld::new(
        vec![Component {
            mean: mu.clone(),
            weight: 1.0,
            tags: BTreeSet::from(["x".to_string()]),
        }],
        Some(nu),
        NoiseSchedule::default(),
    )
    .unwrap();
    let p = compile_prompt("A highway at sunset, with no vehicles.", &ConceptLexicon::builtin()).unwrap();
    let plan = GuidancePlan::cfg(Condition::All, &p, EngineConfig::default());
    let n = 1000;
    let inside = (0..n)
        .filter(|&seed| {
            let t = sample(&w, &plan, &SamplerOptions::default(), seed).unwrap();
            dist(&t.final_x0, &mu) <= 3.0 * (nu * mu.len() as f64).sqrt()
        })
        .count();
    assert!(inside as f64 >= 0.99 * n as f64, "{inside} of {n}");
}

#[test]
fn guidance_raises_mass_on_the_affirmed_tags() {
    let w = templates::aoc_world(&["highway"], "vehicles");
    let p = compile_prompt("A highway at sunset, with no vehicles.", &ConceptLexicon::builtin()).unwrap();
    let tagged = |x: &[f64]| -> f64 {
        let c = w.classify(x).unwrap();
        w.components
            .iter()
            .zip(&c.responsibilities)
            .filter(|(comp, _)| comp.tags.contains("highway"))
            .map(|(_, r)| r)
            .sum()
    };
    let run = |plan: &GuidancePlan| -> Vec<f64> {
        (0..400)
            .map(|seed| tagged(&sample(&w, plan, &SamplerOptions::default(), seed).unwrap().final_x0))
            .collect()
    };
    let guided = run(&GuidancePlan::cfg(Condition::tags(["highway"]), &p, EngineConfig::default()));
    let plain = run(&GuidancePlan::cfg(
        Condition::All,
        &p,
        EngineConfig {
            gamma: 1.0,
            ..Default::default()
        },
    ));
    let d = negproj_core::bench::stats::paired_diff(&guided, &plain);
    assert!(d.higher_at_95(), "{d:?}");
}

use negproj_core::toyworld::{templates::*, ToyWorld};

fn load(name: &str) -> ToyWorld {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/worlds").join(name);
    ToyWorld::from_json(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn shipped_worlds_match_templates() {
    assert_eq!(load("aoc2.json"), aoc_world(&["highway"], "vehicles"));
    assert_eq!(load("mnc4.json"), mnc_world(&["classroom"], &["students", "teacher", "books"]));
    assert_eq!(load("nmi.json"), nmi_world(&["harbor"], "fully_occupied"));
    assert_eq!(load("dns.json"), dns_world(&["stage"], "lit"));
    assert_eq!(load("snd.json"), snd_world("teacher", "students", "paying_attention"));
}

#[test]
fn mnc_world_has_four_scene_components() {
    let w = load("mnc4.json");
    assert_eq!(w.components.iter().filter(|c| !c.tags.is_empty()).count(), 4);
}

#[test]
fn aoc_world_forbidden_share() {
    let w = load("aoc2.json");
    let scene: f64 = w.components.iter().filter(|c| c.tags.contains("highway")).map(|c| c.weight).sum();
    let bad: f64 = w.components.iter().filter(|c| c.tags.contains("vehicles")).map(|c| c.weight).sum();
    assert!((bad / scene - 0.25).abs() < 1e-12);
}

#[test]
fn aoc_forbidden_share_matches_conditional_sampling() {
    use negproj_core::compiler::{compile_prompt, ConceptLexicon};
    use negproj_core::engine::EngineConfig;
    use negproj_core::toyworld::{sample, Condition, GuidancePlan, SamplerOptions};

    let w = load("aoc2.json");
    let p = compile_prompt("A highway at sunset, with no vehicles.", &ConceptLexicon::builtin()).unwrap();
    let config = EngineConfig {
        gamma: 1.0,
        ..Default::default()
    };
    let plan = GuidancePlan::cfg(Condition::tags(["highway"]), &p, config);
    let n = 1000;
    let hits = (0..n)
        .filter(|&seed| {
            let x0 = sample(&w, &plan, &SamplerOptions::default(), seed).unwrap().final_x0;
            w.components[w.classify(&x0).unwrap().component].tags.contains("vehicles")
        })
        .count();
    let share = hits as f64 / n as f64;
    // Three binomial standard errors at p = 0.25.
    assert!((share - 0.25).abs() <= 3.0 * (0.25 * 0.75 / n as f64).sqrt(), "share {share}");
}

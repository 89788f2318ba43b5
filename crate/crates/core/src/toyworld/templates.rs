//! World builders for each negation category.
//!
//! Every world has a background component at the origin that carries no
//! concept tag; scene components sit at distance [`RADIUS`] on orthogonal
//! axes. Affirmative conditioning therefore pulls samples away from the
//! background, and the negated concept is one of the scene components.

use std::collections::BTreeSet;

use super::{AttributeAxis, Component, EntityBlock, NoiseSchedule, ToyWorld};

pub const RADIUS: f64 = 4.0;
/// Mixture weight of the untagged background component.
pub const BACKGROUND_WEIGHT: f64 = 0.9;
/// Background weight of the multi-object world. The heavier background keeps
/// the unconditional centre near the origin, so the per-object normals stay
/// close to orthogonal.
pub const MNC_BACKGROUND_WEIGHT: f64 = 0.998;
/// Clean scene components in single-negation worlds; with one forbidden
/// component of equal weight the forbidden share of the scene is 0.25.
pub const CLEAN_COMPONENTS: usize = 3;
/// Share of the scene mass carried by the required component in double-negation worlds.
pub const REQUIRED_SHARE: f64 = 0.3;
/// Attribute levels of the graded-moderation world, along its attribute axis.
pub const ATTRIBUTE_LEVELS: [f64; 4] = [0.0, 3.0, 6.0, 9.0];
pub const ATTRIBUTE_THRESHOLD: f64 = 4.5;

fn tags(list: &[&str]) -> BTreeSet<String> {
    list.iter().map(|t| t.to_string()).collect()
}

fn axis(dim: usize, k: usize, r: f64) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    v[k] = r;
    v
}

fn background(dim: usize, weight: f64) -> Component {
    Component {
        mean: vec![0.0; dim],
        weight,
        tags: BTreeSet::new(),
    }
}

fn finish(components: Vec<Component>) -> ToyWorld {
    ToyWorld::new(components, None, NoiseSchedule::default()).expect("template worlds are valid")
}

/// Background plus equally weighted scene components on orthogonal axes.
///
/// `clean` components carry only the `scene` tags; one further component per
/// entry of `forbidden` adds that concept.
pub fn scene_world(scene: &[&str], forbidden: &[&str], clean: usize) -> ToyWorld {
    scene_world_with_background(scene, forbidden, clean, BACKGROUND_WEIGHT)
}

pub fn scene_world_with_background(scene: &[&str], forbidden: &[&str], clean: usize, background_weight: f64) -> ToyWorld {
    let dim = clean + forbidden.len();
    let weight = (1.0 - background_weight) / dim as f64;
    let mut comps = vec![background(dim, background_weight)];
    for k in 0..dim {
        let mut t = tags(scene);
        if k >= clean {
            t.insert(forbidden[k - clean].to_string());
        }
        comps.push(Component {
            mean: axis(dim, k, RADIUS),
            weight,
            tags: t,
        });
    }
    finish(comps)
}

/// Scene in which `object` occupies a quarter of the affirmed mass.
pub fn aoc_world(scene: &[&str], object: &str) -> ToyWorld {
    scene_world(scene, &[object], CLEAN_COMPONENTS)
}

/// One clean scene component plus one per negated object.
pub fn mnc_world(scene: &[&str], objects: &[&str]) -> ToyWorld {
    scene_world_with_background(scene, objects, 1, MNC_BACKGROUND_WEIGHT)
}

/// Allowed-item scene plus one component per complementary concept.
pub fn ina_world(affirmed: &[&str], complement: &[&str]) -> ToyWorld {
    scene_world(affirmed, complement, CLEAN_COMPONENTS)
}

/// Scene where `required` is present in one component and absent in the
/// other, the two placed on opposite sides of the background.
pub fn dns_world(scene: &[&str], required: &str) -> ToyWorld {
    let scene_mass = 1.0 - BACKGROUND_WEIGHT;
    finish(vec![
        background(2, BACKGROUND_WEIGHT),
        Component {
            mean: vec![RADIUS, 0.0],
            weight: scene_mass * (1.0 - REQUIRED_SHARE),
            tags: tags(scene),
        },
        Component {
            mean: vec![-RADIUS, 0.0],
            weight: scene_mass * REQUIRED_SHARE,
            tags: {
                let mut t = tags(scene);
                t.insert(required.to_string());
                t
            },
        },
    ])
}

/// Scene components at increasing levels of a graded attribute on axis 1.
///
/// Levels above [`ATTRIBUTE_THRESHOLD`] carry the `attribute` tag.
pub fn nmi_world(scene: &[&str], attribute: &str) -> ToyWorld {
    let scene_mass = 1.0 - BACKGROUND_WEIGHT;
    let mut comps = vec![background(2, BACKGROUND_WEIGHT)];
    for level in ATTRIBUTE_LEVELS {
        let mut t = tags(scene);
        if level > ATTRIBUTE_THRESHOLD {
            t.insert(attribute.to_string());
        }
        comps.push(Component {
            mean: vec![RADIUS, level],
            weight: scene_mass / ATTRIBUTE_LEVELS.len() as f64,
            tags: t,
        });
    }
    let mut w = finish(comps);
    w.attribute = Some(AttributeAxis {
        concept: attribute.to_string(),
        axis: 1,
        threshold: ATTRIBUTE_THRESHOLD,
    });
    w
}

/// Two entities with a two-dimensional block each; either may show `predicate`.
///
/// Components carry the plain `predicate` tag when any entity shows it and a
/// qualified `entity:predicate` tag naming which one does.
pub fn snd_world(head: &str, scoped: &str, predicate: &str) -> ToyWorld {
    let scene_mass = 1.0 - BACKGROUND_WEIGHT;
    let mut comps = vec![background(4, BACKGROUND_WEIGHT)];
    for head_state in 0..2 {
        for scoped_state in 0..2 {
            let mut mean = vec![0.0; 4];
            mean[head_state] = RADIUS;
            mean[2 + scoped_state] = RADIUS;
            let mut t = tags(&[head, scoped]);
            if head_state == 1 || scoped_state == 1 {
                t.insert(predicate.to_string());
            }
            if head_state == 1 {
                t.insert(format!("{head}:{predicate}"));
            }
            if scoped_state == 1 {
                t.insert(format!("{scoped}:{predicate}"));
            }
            comps.push(Component {
                mean,
                weight: scene_mass / 4.0,
                tags: t,
            });
        }
    }
    let mut w = finish(comps);
    w.entities = vec![
        EntityBlock {
            name: head.to_string(),
            start: 0,
            end: 2,
        },
        EntityBlock {
            name: scoped.to_string(),
            start: 2,
            end: 4,
        },
    ];
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aoc_forbidden_share() {
        let w = aoc_world(&["highway"], "vehicles");
        assert_eq!(w.components.len(), 5);
        let scene: f64 = w.components.iter().filter(|c| c.tags.contains("highway")).map(|c| c.weight).sum();
        let forb: f64 = w.components.iter().filter(|c| c.tags.contains("vehicles")).map(|c| c.weight).sum();
        assert!((forb / scene - 0.25).abs() < 1e-12);
    }

    #[test]
    fn all_templates_validate() {
        mnc_world(&["classroom"], &["students", "teacher", "books"]).validate().unwrap();
        ina_world(&["natural_elements"], &["buildings", "vehicles"]).validate().unwrap();
        dns_world(&["stage"], "lit").validate().unwrap();
        nmi_world(&["harbor"], "fully_occupied").validate().unwrap();
        let snd = snd_world("teacher", "students", "paying_attention");
        snd.validate().unwrap();
        assert_eq!(snd.entity_block("students").unwrap(), 2..4);
    }
}

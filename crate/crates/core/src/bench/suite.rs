//! Benchmark suite generation.
//!
//! The first three cases of every category are the hand-written corpus
//! prompts; further cases fill category templates from fixed slot pools in a
//! seeded order.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::compiler::{compile_with, parse, Category, CompileOptions, ConceptLexicon, ConstraintProgram, GrammarTable};
use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::toyworld::templates::{self, CLEAN_COMPONENTS};
use crate::toyworld::ToyWorld;

/// Number of complement concepts rendered in an `only` world.
pub const INA_COMPLEMENT_SIZE: usize = 2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteCase {
    pub id: String,
    pub category: Category,
    pub prompt: String,
    /// Name of the template or fixture the world was built from.
    pub world_fixture: String,
    pub world: ToyWorld,
    pub expected_forbidden: BTreeSet<String>,
    /// Tags a compliant sample must carry (double negation).
    #[serde(default)]
    pub expected_required: BTreeSet<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuiteConfig {
    pub cases_per_category: usize,
    pub compile: CompileOptions,
    /// Restricts the suite to these categories when non-empty.
    pub categories: Vec<Category>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            cases_per_category: 3,
            compile: CompileOptions::default(),
            categories: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
struct CorpusRow {
    category: Category,
    prompt: String,
}

/// The hand-written corpus shipped with the crate, one JSON object per line.
pub const CORPUS: &str = include_str!("../../fixtures/corpus.jsonl");

fn corpus() -> Vec<CorpusRow> {
    CORPUS
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).expect("shipped corpus is valid"))
        .collect()
}

const SCENES: [&str; 8] = ["highway", "desert", "forest", "park", "street", "meadow", "valley", "garden"];
const OBJECTS: [&str; 8] = ["vehicles", "people", "trees", "buildings", "birds", "signs", "rocks", "lamps"];
const NATURAL_ITEMS: [&str; 7] = ["grass", "stars", "trees", "rocks", "water", "moss", "flowers"];
const ROOMS: [&str; 8] = ["room", "office", "kitchen", "library", "park", "garden", "street", "classroom"];
const SFN_FRAMES: [(&str, &str, &str); 7] = [
    ("person", "holding a phone", "using it"),
    ("clock", "ticking", "moving its hands"),
    ("printer", "humming", "printing pages"),
    ("fan", "switched on", "spinning"),
    ("oven", "warm", "baking"),
    ("cat", "awake", "sleeping"),
    ("dog", "awake", "barking"),
];
const NMI_SCENES: [&str; 12] = [
    "street", "market", "park", "harbor", "beach", "forest", "office", "parking lot", "garden", "playground",
    "library", "kitchen",
];
const NMI_ATTRIBUTES: [&str; 3] = ["crowded", "very busy", "fully occupied"];
const NMI_PAIRS: [(&str, &str); 15] = [
    ("dog", "aggressive"),
    ("cat", "aggressive"),
    ("forest", "dense"),
    ("valley", "dense"),
    ("sky", "completely overcast"),
    ("table", "polished"),
    ("room", "furnished"),
    ("office", "furnished"),
    ("road", "paved"),
    ("street", "paved"),
    ("parking lot", "paved"),
    ("highway", "paved"),
    ("mountain peak", "completely snow-covered"),
    ("valley", "completely snow-covered"),
    ("hillside", "completely snow-covered"),
];
const DNS_PAIRS: [(&str, &[&str]); 6] = [
    (
        "unlit",
        &[
            "stage", "street", "garden", "park", "kitchen", "room", "office", "library", "highway", "market", "classroom",
            "playground", "beach", "harbor", "dock", "parking lot", "forest trail", "riverbank", "canyon", "cave",
            "rooftop", "valley", "meadow", "desert", "snowfield", "road",
        ],
    ),
    ("unfurnished", &["room", "office", "library", "cabin", "classroom", "kitchen"]),
    ("unpaved", &["road", "street", "parking lot", "park", "playground", "highway", "market", "garden"]),
    ("shell-less", &["beach", "riverbank", "lake", "dock"]),
    ("vent-less", &["rooftop", "kitchen", "office"]),
    ("unpolished", &["table", "office", "library", "kitchen", "room"]),
];
const SND_HEADS: [&str; 6] = ["teacher", "chef", "robot", "dog", "cat", "person"];
const SND_LINKS: [&str; 3] = ["watching", "next to", "near"];
const SND_TARGETS: [(&str, &str, bool); 6] = [
    ("child", "sleeping", true),
    ("child", "running", true),
    ("student", "paying attention", true),
    ("screen", "displaying content", false),
    ("dog", "barking", false),
    ("robot", "moving", false),
];

fn article(word: &str) -> &'static str {
    if word.starts_with(['a', 'e', 'i', 'o', 'u']) {
        "An"
    } else {
        "A"
    }
}

/// Template prompts for `category`, in a fixed order before shuffling.
fn template_prompts(category: Category) -> Vec<String> {
    let mut out = Vec::new();
    match category {
        Category::Aoc => {
            for s in SCENES {
                for o in OBJECTS {
                    out.push(format!("A {s} with no {o}."));
                }
            }
        }
        Category::Len => {
            for s in SCENES {
                for o in OBJECTS {
                    out.push(format!("A {s} at dawn, with no {o} appearing."));
                }
            }
        }
        Category::Mnc => {
            for s in SCENES {
                for (i, a) in OBJECTS.iter().enumerate() {
                    let b = OBJECTS[(i + 1) % OBJECTS.len()];
                    let c = OBJECTS[(i + 3) % OBJECTS.len()];
                    out.push(format!("A {s} with no {a}, no {b}, and no {c}."));
                }
            }
        }
        Category::Ina => {
            for s in SCENES {
                for (i, a) in NATURAL_ITEMS.iter().enumerate() {
                    for b in &NATURAL_ITEMS[i + 1..] {
                        out.push(format!("A {s} with only {a} and {b}."));
                    }
                }
            }
        }
        Category::Sfn => {
            for (entity, state, predicate) in SFN_FRAMES {
                for room in ROOMS {
                    let a = article(room).to_lowercase();
                    out.push(format!("{} {entity} in {a} {room} {state} but not {predicate}.", article(entity)));
                }
            }
        }
        Category::Nmi => {
            for s in NMI_SCENES {
                for a in NMI_ATTRIBUTES {
                    out.push(format!("A {s} that is not {a}."));
                }
            }
            for (s, a) in NMI_PAIRS {
                out.push(format!("A {s} that is not {a}."));
            }
        }
        Category::Dns => {
            for (affixed, scenes) in DNS_PAIRS {
                for scene in scenes {
                    out.push(format!("A {scene} that is not {affixed}."));
                }
            }
        }
        Category::Snd => {
            for head in SND_HEADS {
                for (scoped, predicate, person) in SND_TARGETS {
                    if head == scoped {
                        continue;
                    }
                    let rel = if person { "who" } else { "that" };
                    for link in SND_LINKS {
                        out.push(format!("{} {head} {link} a {scoped} {rel} is not {predicate}.", article(head)));
                    }
                }
            }
        }
    }
    out
}

/// Builds the world a compiled program is evaluated in.
///
/// Returns the world, its template name and the forbidden and required tag sets.
pub fn world_for_program(
    program: &ConstraintProgram,
    seed: u64,
    label: &str,
) -> Result<(ToyWorld, String, BTreeSet<String>, BTreeSet<String>)> {
    let category = program
        .category()
        .ok_or_else(|| Error::Bench(format!("{label}: prompt carries no negation")))?;
    let scene: Vec<&str> = program.affirmed_keys.iter().map(String::as_str).collect();
    if scene.is_empty() {
        return Err(Error::Bench(format!("{label}: prompt affirms no concept")));
    }
    let keys: Vec<&str> = program.specs.iter().map(|s| s.concept_key.as_str()).collect();
    let set = |items: &[&str]| items.iter().map(|s| s.to_string()).collect::<BTreeSet<_>>();
    let none = BTreeSet::new();
    Ok(match category {
        Category::Aoc | Category::Len | Category::Sfn => {
            (templates::aoc_world(&scene, keys[0]), "aoc".into(), set(&keys[..1]), none)
        }
        Category::Mnc => (templates::mnc_world(&scene, &keys), "mnc".into(), set(&keys), none),
        Category::Ina => {
            let mut pool = keys.clone();
            pool.shuffle(&mut stream_rng(seed, label, 0));
            pool.truncate(INA_COMPLEMENT_SIZE);
            pool.sort_unstable();
            (
                templates::scene_world(&scene, &pool, CLEAN_COMPONENTS),
                "ina".into(),
                set(&pool),
                none,
            )
        }
        Category::Dns => (templates::dns_world(&scene, keys[0]), "dns".into(), none, set(&keys[..1])),
        Category::Nmi => (templates::nmi_world(&scene, keys[0]), "nmi".into(), set(&keys[..1]), none),
        Category::Snd => {
            let spec = &program.specs[0];
            let scoped = spec
                .scope_entity
                .as_deref()
                .ok_or_else(|| Error::Bench(format!("{label}: scoped negation without an entity")))?;
            let head = scene
                .iter()
                .copied()
                .find(|k| *k != scoped && *k != spec.concept_key)
                .ok_or_else(|| Error::Bench(format!("{label}: scoped negation needs a second entity")))?;
            let forbidden = format!("{scoped}:{}", spec.concept_key);
            (
                templates::snd_world(head, scoped, &spec.concept_key),
                "snd".into(),
                BTreeSet::from([forbidden]),
                none,
            )
        }
    })
}

/// Compiles `prompt` against `world`, the form every bench run uses.
pub fn compile_case(
    prompt: &str,
    world: &ToyWorld,
    lexicon: &ConceptLexicon,
    opts: &CompileOptions,
) -> Result<ConstraintProgram> {
    let parsed = parse(prompt, &GrammarTable::default())?;
    Ok(compile_with(&parsed, lexicon, opts, Some(&world.concepts()))?)
}

fn build_case(
    id: String,
    expected: Category,
    prompt: &str,
    lexicon: &ConceptLexicon,
    config: &SuiteConfig,
    seed: u64,
) -> Result<SuiteCase> {
    let parsed = parse(prompt, &GrammarTable::default())?;
    let program = compile_with(&parsed, lexicon, &config.compile, None)?;
    let (world, fixture, forbidden, required) = world_for_program(&program, seed, &id)?;
    let bound = compile_case(prompt, &world, lexicon, &config.compile)?;
    if bound.category() != Some(expected) {
        return Err(Error::Bench(format!(
            "{id}: prompt {prompt:?} compiles to {:?}, labelled {expected}",
            bound.category()
        )));
    }
    Ok(SuiteCase {
        id,
        category: expected,
        prompt: prompt.to_string(),
        world_fixture: format!("template:{fixture}"),
        world,
        expected_forbidden: forbidden,
        expected_required: required,
    })
}

/// Corpus prompts first, then seeded template fills, per category.
pub fn gen_suite(config: &SuiteConfig, lexicon: &ConceptLexicon, seed: u64) -> Result<Vec<SuiteCase>> {
    let rows = corpus();
    let mut cases = Vec::new();
    for category in Category::ALL {
        if !config.categories.is_empty() && !config.categories.contains(&category) {
            continue;
        }
        let mut prompts: Vec<String> = rows
            .iter()
            .filter(|r| r.category == category)
            .map(|r| r.prompt.clone())
            .collect();
        let mut extra = template_prompts(category);
        extra.retain(|p| !prompts.contains(p));
        extra.shuffle(&mut stream_rng(seed, &format!("suite/{category}"), 0));
        prompts.extend(extra);
        if prompts.len() < config.cases_per_category {
            return Err(Error::Bench(format!(
                "{category}: only {} prompts available, {} requested",
                prompts.len(),
                config.cases_per_category
            )));
        }
        for (i, prompt) in prompts.iter().take(config.cases_per_category).enumerate() {
            let id = format!("{}-{:02}", category.as_str().to_lowercase(), i + 1);
            cases.push(build_case(id, category, prompt, lexicon, config, seed)?);
        }
    }
    Ok(cases)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_prompts_come_first() {
        let suite = gen_suite(&SuiteConfig::default(), &ConceptLexicon::builtin(), 1).unwrap();
        assert_eq!(suite.len(), 24);
        assert_eq!(suite[0].prompt, "A highway at sunset, with no vehicles.");
        let dns: Vec<_> = suite.iter().filter(|c| c.category == Category::Dns).collect();
        assert_eq!(dns[0].prompt, "A stage that is not unlit.");
        assert_eq!(dns[0].expected_required, BTreeSet::from(["lit".to_string()]));
    }

    #[test]
    fn every_template_prompt_compiles_to_its_category() {
        let lex = ConceptLexicon::builtin();
        let config = SuiteConfig::default();
        for category in Category::ALL {
            for (i, prompt) in template_prompts(category).iter().enumerate() {
                build_case(format!("t-{i}"), category, prompt, &lex, &config, 0)
                    .unwrap_or_else(|e| panic!("{prompt}: {e}"));
            }
        }
    }

    #[test]
    fn larger_suites_are_seeded() {
        let lex = ConceptLexicon::builtin();
        let config = SuiteConfig {
            cases_per_category: 50,
            ..Default::default()
        };
        let a = gen_suite(&config, &lex, 3).unwrap();
        assert_eq!(a, gen_suite(&config, &lex, 3).unwrap());
        assert_eq!(a.len(), 400);
        let b = gen_suite(&config, &lex, 4).unwrap();
        assert_ne!(
            a.iter().map(|c| &c.prompt).collect::<Vec<_>>(),
            b.iter().map(|c| &c.prompt).collect::<Vec<_>>()
        );
    }

    #[test]
    fn category_filter() {
        let config = SuiteConfig {
            categories: vec![Category::Dns],
            ..Default::default()
        };
        let suite = gen_suite(&config, &ConceptLexicon::builtin(), 1).unwrap();
        assert_eq!(suite.len(), 3);
        assert!(suite.iter().all(|c| c.category == Category::Dns));
    }
}

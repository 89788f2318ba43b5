use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::lexicon::normalize;
use super::{
    BoundParams, Category, CompileError, ConceptLexicon, ConstraintProgram, ConstraintSpec, GrammarTable,
    NegationParse, OperatorKind, TargetRole,
};
use crate::geometry::DEFAULT_EPS_NUM;
use crate::scheduler::{DEFAULT_EXPONENT, DEFAULT_FINAL_BOUND};

/// Tags that mark scene or property concepts; they never enter an `only` complement.
const NON_OBJECT_TAGS: [&str; 3] = ["scene", "attribute", "action"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompileOptions {
    pub b_final: f64,
    pub p: f64,
    /// Exponent for temporally evolving scenes.
    pub len_p: f64,
    /// NMI ceiling as a fraction of the initial alignment.
    pub nmi_tau_fraction: f64,
    /// Lower bound on the NMI ceiling.
    pub nmi_tau_floor: f64,
}

impl Default for CompileOptions {
    fn default() -> Self {
        Self {
            b_final: DEFAULT_FINAL_BOUND,
            p: DEFAULT_EXPONENT,
            len_p: 1.0,
            nmi_tau_fraction: 0.5,
            nmi_tau_floor: DEFAULT_EPS_NUM,
        }
    }
}

impl CompileOptions {
    fn validate(&self) -> Result<(), CompileError> {
        let bad = |m: &str| Err(CompileError::InvalidOption(m.into()));
        if !(self.p > 0.0) || !(self.len_p > 0.0) {
            return bad("schedule exponents must be positive");
        }
        if !(self.nmi_tau_fraction > 0.0) || !(self.nmi_tau_floor > 0.0) {
            return bad("moderation ceiling must be positive");
        }
        if !self.b_final.is_finite() {
            return bad("final bound must be finite");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScopeResolution {
    /// Entity index in the parse's scope tree.
    pub index: usize,
    /// Head noun of that entity.
    pub entity: String,
}

/// The entity heading the negated relative clause.
pub fn resolve_scope(parse: &NegationParse) -> Result<ScopeResolution, CompileError> {
    let mut found: Option<(usize, usize)> = None;
    for clause in &parse.scope.clauses {
        let scoped = clause.negated.iter().any(|&k| {
            matches!(
                parse.negated[k].target_role,
                TargetRole::Predicate | TargetRole::Attribute
            )
        });
        if !scoped {
            continue;
        }
        match found {
            Some((ante, _)) if ante != clause.antecedent => {
                return Err(CompileError::AmbiguousScope {
                    index: clause.relativizer,
                    token: parse.tokens[clause.relativizer].clone(),
                    reason: "negated clauses attach to different entities".into(),
                });
            }
            Some(_) => {}
            None => found = Some((clause.antecedent, clause.relativizer)),
        }
    }
    let (index, _) = found.ok_or(CompileError::NoSubordinateClause)?;
    Ok(ScopeResolution {
        index,
        entity: parse.scope.entities[index].head.clone(),
    })
}

fn in_scoped_clause(parse: &NegationParse, span: usize) -> bool {
    parse.scope.entities.len() >= 2 && parse.scope.clauses.iter().any(|c| c.negated.contains(&span))
}

/// Single-span category of negated span `span`, before multi-constraint tagging.
pub fn categorize(parse: &NegationParse, span: usize) -> Result<Category, CompileError> {
    let s = &parse.negated[span];
    let temporal = s.temporal.is_some() || !parse.temporal_cues.is_empty();
    let cat = if s.depth() % 2 == 0 {
        Category::Dns
    } else if s.operator_kind() == OperatorKind::OnlyRestrict {
        Category::Ina
    } else if matches!(s.target_role, TargetRole::Predicate | TargetRole::Attribute)
        && in_scoped_clause(parse, span)
    {
        Category::Snd
    } else if s.target_role == TargetRole::Object && temporal {
        Category::Len
    } else if s.target_role == TargetRole::Predicate {
        Category::Sfn
    } else if s.target_role == TargetRole::Attribute
        && matches!(s.operator_kind(), OperatorKind::Not | OperatorKind::ContrastiveButNot)
    {
        Category::Nmi
    } else if matches!(s.target_role, TargetRole::Attribute | TargetRole::Object) {
        Category::Aoc
    } else {
        return Err(CompileError::Uncategorized(s.canonical()));
    };
    Ok(cat)
}

/// Concepts outside an `only` restriction: tagged objects sharing no tag with the allowed items.
fn complement(
    lexicon: &ConceptLexicon,
    allowed: &[String],
    affirmed: &[String],
    world_concepts: Option<&BTreeSet<String>>,
) -> Vec<String> {
    let allowed_tags: BTreeSet<&str> = allowed.iter().flat_map(|k| lexicon.tags(k)).collect();
    lexicon
        .keys()
        .filter(|k| world_concepts.is_none_or(|w| w.contains(*k)))
        .filter(|k| !allowed.iter().any(|a| a == k) && !affirmed.iter().any(|a| a == k))
        .filter(|k| {
            let tags = lexicon.tags(k);
            !tags.is_empty()
                && tags.iter().all(|t| !NON_OBJECT_TAGS.contains(t))
                && tags.is_disjoint(&allowed_tags)
        })
        .map(str::to_string)
        .collect()
}

pub fn compile(parse: &NegationParse, lexicon: &ConceptLexicon) -> Result<ConstraintProgram, CompileError> {
    compile_with(parse, lexicon, &CompileOptions::default(), None)
}

/// Compiles a parse; `world_concepts` narrows `only` complements to concepts a world can render.
pub fn compile_with(
    parse: &NegationParse,
    lexicon: &ConceptLexicon,
    opts: &CompileOptions,
    world_concepts: Option<&BTreeSet<String>>,
) -> Result<ConstraintProgram, CompileError> {
    opts.validate()?;
    let mut affirmed_keys: Vec<String> = Vec::new();
    for span in &parse.affirmed {
        for k in lexicon.mentions(&span.text) {
            if !affirmed_keys.contains(&k) {
                affirmed_keys.push(k);
            }
        }
    }

    let multi = parse.negated.len() >= 2;
    let mut missing = BTreeSet::new();
    let mut specs = Vec::new();
    for (idx, s) in parse.negated.iter().enumerate() {
        let category = categorize(parse, idx)?;
        let sigma = if s.depth() % 2 == 1 { 1.0 } else { -1.0 };
        let schedule = BoundParams::Schedule {
            b_final: opts.b_final,
            p: opts.p,
        };
        let bound = match category {
            Category::Len => BoundParams::Schedule {
                b_final: opts.b_final,
                p: opts.len_p,
            },
            Category::Nmi => BoundParams::Moderation {
                tau_fraction: opts.nmi_tau_fraction,
                tau_floor: opts.nmi_tau_floor,
                p: opts.p,
            },
            _ => schedule,
        };
        let category = if multi { Category::Mnc } else { category };

        let mut keys = Vec::new();
        if s.target_role == TargetRole::CategoryComplement {
            let mut allowed = Vec::new();
            for item in &s.items {
                match lexicon.resolve_phrase(item) {
                    Some(k) => allowed.push(k),
                    None => {
                        missing.insert(normalize(item));
                    }
                }
            }
            if !allowed.is_empty() {
                let comp = complement(lexicon, &allowed, &affirmed_keys, world_concepts);
                if comp.is_empty() {
                    return Err(CompileError::EmptyComplement(allowed));
                }
                keys = comp;
            }
        } else {
            match lexicon.resolve_phrase(&s.concept_phrase) {
                Some(k) => keys.push(k),
                None => {
                    missing.insert(s.concept_phrase.clone());
                }
            }
        }

        let (scope_index, scope_entity) = if category == Category::Snd {
            let res = resolve_scope(parse)?;
            let entity = &parse.scope.entities[res.index];
            let det_free = entity.span.text.split_once(' ').map_or("", |(_, rest)| rest);
            let key = lexicon
                .resolve_phrase(det_free)
                .or_else(|| lexicon.resolve_phrase(&res.entity));
            match key {
                Some(k) => (Some(res.index), Some(k)),
                None => {
                    missing.insert(res.entity.clone());
                    (Some(res.index), None)
                }
            }
        } else {
            (None, None)
        };

        for concept_key in keys {
            specs.push(ConstraintSpec {
                category,
                concept_key,
                sigma,
                bound,
                scope_index,
                scope_entity: scope_entity.clone(),
                source_span: idx,
            });
        }
    }
    if !missing.is_empty() {
        return Err(CompileError::MissingConcepts(missing.into_iter().collect()));
    }
    Ok(ConstraintProgram {
        specs,
        affirmed_keys,
        source_parse: parse.clone(),
    })
}

/// Parses and compiles with the default grammar and options.
pub fn compile_prompt(prompt: &str, lexicon: &ConceptLexicon) -> Result<ConstraintProgram, CompileError> {
    let parse = super::parse(prompt, &GrammarTable::default())?;
    compile(&parse, lexicon)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn program(prompt: &str) -> ConstraintProgram {
        compile_prompt(prompt, &ConceptLexicon::builtin()).unwrap()
    }

    #[test]
    fn aoc_strict_absence() {
        let p = program("A highway at sunset, with no vehicles.");
        assert_eq!(p.specs.len(), 1);
        let s = &p.specs[0];
        assert_eq!(s.category, Category::Aoc);
        assert_eq!(s.concept_key, "vehicles");
        assert_eq!(s.sigma, 1.0);
        assert_eq!(s.bound, BoundParams::Schedule { b_final: 0.0, p: 2.0 });
        assert_eq!(p.affirmed_keys, vec!["highway"]);
    }

    #[test]
    fn dns_flips_sign() {
        let p = program("A stage that is not unlit.");
        assert_eq!(p.specs[0].category, Category::Dns);
        assert_eq!(p.specs[0].concept_key, "lit");
        assert_eq!(p.specs[0].sigma, -1.0);
    }

    #[test]
    fn mnc_keeps_source_order() {
        let p = program("A classroom scene with no students, no teacher, and no books.");
        let keys: Vec<_> = p.specs.iter().map(|s| s.concept_key.as_str()).collect();
        assert_eq!(keys, vec!["students", "teacher", "books"]);
        assert!(p.specs.iter().all(|s| s.category == Category::Mnc));
    }

    #[test]
    fn snd_resolves_antecedent() {
        let p = program("A teacher helping a student who is not paying attention.");
        let s = &p.specs[0];
        assert_eq!(s.category, Category::Snd);
        assert_eq!(s.concept_key, "paying_attention");
        assert_eq!(s.scope_index, Some(1));
        assert_eq!(s.scope_entity.as_deref(), Some("students"));
    }

    #[test]
    fn nmi_uses_positive_ceiling() {
        let p = program("A harbor that is not fully occupied.");
        let s = &p.specs[0];
        assert_eq!(s.category, Category::Nmi);
        assert!(s.bound.final_bound(0.0) > 0.0);
    }

    #[test]
    fn ina_excludes_other_tags() {
        let world: BTreeSet<String> = ["background", "natural_elements", "buildings", "vehicles"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let parse = super::super::parse("A scene featuring only natural elements.", &GrammarTable::default()).unwrap();
        let p = compile_with(&parse, &ConceptLexicon::builtin(), &CompileOptions::default(), Some(&world)).unwrap();
        let keys: Vec<_> = p.specs.iter().map(|s| s.concept_key.as_str()).collect();
        assert_eq!(keys, vec!["buildings", "vehicles"]);
        assert!(p.specs.iter().all(|s| s.category == Category::Ina));
    }

    #[test]
    fn missing_concepts_are_listed() {
        let err = compile_prompt("A street with no zeppelins.", &ConceptLexicon::builtin()).unwrap_err();
        assert_eq!(err, CompileError::MissingConcepts(vec!["zeppelins".into()]));
    }

    #[test]
    fn scope_needs_a_clause() {
        let parse = super::super::parse("A dog that is not aggressive.", &GrammarTable::default()).unwrap();
        assert_eq!(resolve_scope(&parse).unwrap().entity, "dog");
        let parse = super::super::parse("A highway, with no vehicles.", &GrammarTable::default()).unwrap();
        assert_eq!(resolve_scope(&parse), Err(CompileError::NoSubordinateClause));
    }

    #[test]
    fn invalid_options_rejected() {
        let parse = super::super::parse("A dog that is not aggressive.", &GrammarTable::default()).unwrap();
        let opts = CompileOptions {
            nmi_tau_fraction: 0.0,
            ..Default::default()
        };
        assert!(matches!(
            compile_with(&parse, &ConceptLexicon::builtin(), &opts, None),
            Err(CompileError::InvalidOption(_))
        ));
    }
}

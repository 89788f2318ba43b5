//! Rule-table parsing of restricted negation prompts and compilation into
//! category-tagged constraint programs.
//!
//! A prompt is split into affirmed spans, negated spans with their operator
//! stack, and a small scope structure (entities plus relative clauses). The
//! compiler then assigns each negated span one of eight constraint
//! categories and binds it to a lexicon concept.

mod compile;
mod grammar;
mod lexicon;
mod parse;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use compile::{
    categorize, compile, compile_prompt, compile_with, resolve_scope, CompileOptions, ScopeResolution,
};
pub use grammar::GrammarTable;
pub use lexicon::{ConceptLexicon, LexiconEntry};
pub use parse::parse;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompileError {
    #[error("unparseable prompt at token {index} ({token:?}): {reason}")]
    Unparseable {
        index: usize,
        token: String,
        reason: String,
    },
    #[error("ambiguous scope at token {index} ({token:?}): {reason}")]
    AmbiguousScope {
        index: usize,
        token: String,
        reason: String,
    },
    #[error("missing lexicon entries: {}", .0.join(", "))]
    MissingConcepts(Vec<String>),
    #[error("no category rule applies to negated span {0:?}")]
    Uncategorized(String),
    #[error("prompt has no subordinate clause with a negated predicate or attribute")]
    NoSubordinateClause,
    #[error("`only` restriction to {0:?} leaves no complementary concept to exclude")]
    EmptyComplement(Vec<String>),
    #[error("invalid compile option: {0}")]
    InvalidOption(String),
}

/// Half-open token range with its surface text.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub text: String,
}

impl Span {
    pub fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    ExplicitNo,
    Not,
    Without,
    OnlyRestrict,
    Morphological,
    ContrastiveButNot,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetRole {
    Object,
    Predicate,
    Attribute,
    CategoryComplement,
}

/// The token that introduced a negation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cue {
    pub index: usize,
    pub text: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NegatedSpan {
    pub span: Span,
    /// Operator stack, outermost first. Its length is the negation depth.
    pub operators: Vec<OperatorKind>,
    pub target_role: TargetRole,
    pub cue: Cue,
    /// Governed phrase with negative affixes removed.
    pub concept_phrase: String,
    /// Head noun of the entity an attribute or predicate applies to.
    pub head: Option<String>,
    /// Temporal cue attached to the governed phrase, if any.
    pub temporal: Option<String>,
    /// Allowed items of an `only` restriction.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub items: Vec<String>,
}

impl NegatedSpan {
    pub fn depth(&self) -> u32 {
        self.operators.len() as u32
    }

    /// Primary operator kind, the outermost one.
    pub fn operator_kind(&self) -> OperatorKind {
        self.operators[0]
    }

    /// Readable canonical form: `vehicles`, `lit(stage)`, `complement(natural elements)`.
    pub fn canonical(&self) -> String {
        match (self.target_role, &self.head) {
            (TargetRole::CategoryComplement, _) => format!("complement({})", self.items.join(", ")),
            (TargetRole::Attribute | TargetRole::Predicate, Some(h)) => {
                format!("{}({})", self.concept_phrase, h)
            }
            _ => self.concept_phrase.clone(),
        }
    }
}

/// Noun phrase opened by a determiner.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entity {
    pub span: Span,
    pub head: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelativeClause {
    pub relativizer: usize,
    /// Entity indices that could head the clause; exactly one after parsing.
    pub antecedent: usize,
    /// Negated spans governed inside the clause.
    pub negated: Vec<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScopeTree {
    pub entities: Vec<Entity>,
    pub clauses: Vec<RelativeClause>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NegationParse {
    pub prompt: String,
    pub tokens: Vec<String>,
    pub affirmed: Vec<Span>,
    pub negated: Vec<NegatedSpan>,
    pub scope: ScopeTree,
    /// Every temporal cue in the prompt, negated or not.
    pub temporal_cues: Vec<Cue>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    #[serde(rename = "AOC")]
    Aoc,
    #[serde(rename = "LEN")]
    Len,
    #[serde(rename = "INA")]
    Ina,
    #[serde(rename = "MNC")]
    Mnc,
    #[serde(rename = "SFN")]
    Sfn,
    #[serde(rename = "NMI")]
    Nmi,
    #[serde(rename = "DNS")]
    Dns,
    #[serde(rename = "SND")]
    Snd,
}

impl Category {
    pub const ALL: [Category; 8] = [
        Category::Aoc,
        Category::Len,
        Category::Ina,
        Category::Mnc,
        Category::Sfn,
        Category::Nmi,
        Category::Dns,
        Category::Snd,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Aoc => "AOC",
            Category::Len => "LEN",
            Category::Ina => "INA",
            Category::Mnc => "MNC",
            Category::Sfn => "SFN",
            Category::Nmi => "NMI",
            Category::Dns => "DNS",
            Category::Snd => "SND",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Category::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown category {s:?}"))
    }
}

/// How a spec's bound evolves over sampling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundParams {
    /// Polynomial tightening from the first-step alignment down to `b_final`.
    Schedule { b_final: f64, p: f64 },
    /// Tightening toward a positive ceiling `τ = max(tau_fraction · b_init, tau_floor)`.
    Moderation { tau_fraction: f64, tau_floor: f64, p: f64 },
}

impl BoundParams {
    pub fn exponent(&self) -> f64 {
        match *self {
            BoundParams::Schedule { p, .. } | BoundParams::Moderation { p, .. } => p,
        }
    }

    /// Final bound given the resolved initial bound.
    pub fn final_bound(&self, b_init: f64) -> f64 {
        match *self {
            BoundParams::Schedule { b_final, .. } => b_final,
            BoundParams::Moderation {
                tau_fraction,
                tau_floor,
                ..
            } => (tau_fraction * b_init).max(tau_floor),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSpec {
    pub category: Category,
    pub concept_key: String,
    pub sigma: f64,
    pub bound: BoundParams,
    /// Index into the parse's entity list for scope-resolved constraints.
    pub scope_index: Option<usize>,
    /// Lexicon key of the scoped entity.
    pub scope_entity: Option<String>,
    /// Index of the originating negated span.
    pub source_span: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintProgram {
    pub specs: Vec<ConstraintSpec>,
    /// Concepts named in the affirmed part of the prompt.
    pub affirmed_keys: Vec<String>,
    pub source_parse: NegationParse,
}

impl ConstraintProgram {
    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    /// Category of the program as a whole.
    pub fn category(&self) -> Option<Category> {
        self.specs.first().map(|s| s.category)
    }

    /// Every concept the prompt names, ignoring whether it is negated.
    pub fn mentioned_keys(&self) -> Vec<String> {
        let mut keys = self.affirmed_keys.clone();
        for spec in &self.specs {
            let named = spec.category != Category::Ina && spec.sigma > 0.0;
            if named && !keys.contains(&spec.concept_key) {
                keys.push(spec.concept_key.clone());
            }
        }
        keys
    }
}

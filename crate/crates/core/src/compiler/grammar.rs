use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

/// Closed word lists driving the restricted prompt grammar.
///
/// Everything the parser recognizes as structure comes from here; any other
/// word is content. Tables are plain data so alternative grammars can be
/// loaded from JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GrammarTable {
    pub determiners: BTreeSet<String>,
    pub explicit_no: BTreeSet<String>,
    pub not: BTreeSet<String>,
    pub without: BTreeSet<String>,
    pub only: BTreeSet<String>,
    pub contrastive: BTreeSet<String>,
    pub relativizers: BTreeSet<String>,
    pub copulas: BTreeSet<String>,
    pub conjunctions: BTreeSet<String>,
    /// Words that end a noun phrase.
    pub phrase_breaks: BTreeSet<String>,
    /// Single- or multi-word cues for scene evolution over time.
    pub temporal_cues: Vec<String>,
    pub degree_adverbs: BTreeSet<String>,
    /// Adjectives used predicatively after a noun ("a line active but ..."); they end a noun phrase.
    pub predicative_adjectives: BTreeSet<String>,
    pub pronouns: BTreeSet<String>,
    pub negative_prefixes: Vec<String>,
    pub negative_suffixes: Vec<String>,
    /// Words that look affixed but are not negations ("under", "unless", ...).
    pub affix_exceptions: BTreeSet<String>,
    /// `-ing` words that are nouns, not predicates.
    pub ing_nouns: BTreeSet<String>,
}

fn set(words: &[&str]) -> BTreeSet<String> {
    words.iter().map(|w| w.to_string()).collect()
}

impl Default for GrammarTable {
    fn default() -> Self {
        Self {
            determiners: set(&["a", "an", "the"]),
            explicit_no: set(&["no"]),
            not: set(&["not"]),
            without: set(&["without"]),
            only: set(&["only"]),
            contrastive: set(&["but"]),
            relativizers: set(&["who", "that", "which"]),
            copulas: set(&["is", "are", "was", "were"]),
            conjunctions: set(&["and", "or"]),
            phrase_breaks: set(&[
                "at", "with", "near", "next", "to", "in", "on", "of", "under", "after", "before",
                "featuring", "by", "from", "over", "into", "behind", "beside", "around", "across",
                "through", "during", "for", "while", "inside", "outside", "above", "below",
            ]),
            temporal_cues: vec![
                "appearing".into(),
                "emerging".into(),
                "lighting up".into(),
                "forming".into(),
                "arriving".into(),
                "gradually".into(),
                "over time".into(),
                "eventually".into(),
            ],
            degree_adverbs: set(&[
                "fully", "completely", "entirely", "totally", "very", "overly", "too", "extremely",
            ]),
            predicative_adjectives: set(&["active", "idle", "asleep", "awake", "alone", "empty", "open"]),
            pronouns: set(&["it", "its", "them", "their", "his", "her"]),
            negative_prefixes: vec!["un".into(), "non".into()],
            negative_suffixes: vec!["less".into()],
            affix_exceptions: set(&[
                "under", "underneath", "until", "unless", "unit", "units", "unity", "union",
                "unique", "universe", "universal", "university", "uniform", "unicorn", "uncle",
                "unto", "none", "nonetheless", "nevertheless", "less", "bless", "noon",
            ]),
            ing_nouns: set(&[
                "ceiling", "building", "buildings", "morning", "evening", "nothing", "something",
                "thing", "things", "king", "ring", "string", "wing", "spring", "painting", "clothing",
                "railing", "ceilings", "awning",
            ]),
        }
    }
}

impl GrammarTable {
    /// Number of negative affixes on `word` and the remaining base.
    ///
    /// `unlit → (1, "lit")`, `shell-less → (1, "shell")`, `un-shell-less → (2, "shell")`.
    pub fn strip_negative_affixes(&self, word: &str) -> (u32, String) {
        let lower = word.to_lowercase();
        if self.affix_exceptions.contains(&lower) || lower.starts_with("under") || (lower.starts_with("uni") && !lower.starts_with("unin")) {
            return (0, lower);
        }
        let mut count = 0;
        let mut base = lower.clone();
        for suffix in &self.negative_suffixes {
            if let Some(stem) = base.strip_suffix(suffix.as_str()) {
                let stem = stem.trim_end_matches('-');
                if stem.chars().filter(|c| c.is_alphabetic()).count() >= 3 {
                    base = stem.to_string();
                    count += 1;
                    break;
                }
            }
        }
        for prefix in &self.negative_prefixes {
            if let Some(rest) = base.strip_prefix(prefix.as_str()) {
                let rest = rest.trim_start_matches('-');
                if rest.chars().filter(|c| c.is_alphabetic()).count() >= 3 {
                    base = rest.to_string();
                    count += 1;
                    break;
                }
            }
        }
        (count, base)
    }

    pub fn is_predicate_word(&self, word: &str) -> bool {
        let lower = word.to_lowercase();
        lower.ends_with("ing") && lower.len() > 4 && !self.ing_nouns.contains(&lower)
    }

    pub fn is_participle(&self, word: &str) -> bool {
        let lower = word.to_lowercase();
        (lower.ends_with("ed") && lower.len() > 3 && !lower.contains('-')) || self.is_predicate_word(&lower)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affixes() {
        let g = GrammarTable::default();
        assert_eq!(g.strip_negative_affixes("unlit"), (1, "lit".into()));
        assert_eq!(g.strip_negative_affixes("shell-less"), (1, "shell".into()));
        assert_eq!(g.strip_negative_affixes("vent-less"), (1, "vent".into()));
        assert_eq!(g.strip_negative_affixes("un-shell-less"), (2, "shell".into()));
        assert_eq!(g.strip_negative_affixes("under"), (0, "under".into()));
        assert_eq!(g.strip_negative_affixes("unless"), (0, "unless".into()));
        assert_eq!(g.strip_negative_affixes("natural"), (0, "natural".into()));
        assert_eq!(g.strip_negative_affixes("uninhabited"), (1, "inhabited".into()));
    }

    #[test]
    fn predicates() {
        let g = GrammarTable::default();
        assert!(g.is_predicate_word("paying"));
        assert!(g.is_predicate_word("displaying"));
        assert!(!g.is_predicate_word("building"));
        assert!(!g.is_predicate_word("aggressive"));
    }
}

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LexiconEntry {
    #[serde(default)]
    pub aliases: Vec<String>,
    /// Category tags such as `natural`, `artificial`, `scene`.
    #[serde(default)]
    pub tags: Vec<String>,
}

/// Maps surface phrases to concept keys; stands in for a text encoder.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConceptLexicon {
    entries: BTreeMap<String, LexiconEntry>,
}

pub(crate) fn normalize(phrase: &str) -> String {
    phrase
        .split_whitespace()
        .map(|w| w.trim_matches(|c: char| c == ',' || c == '.').to_lowercase())
        .filter(|w| !w.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

impl ConceptLexicon {
    pub fn new(entries: BTreeMap<String, LexiconEntry>) -> Self {
        Self { entries }
    }

    /// The lexicon shipped with the crate.
    pub fn builtin() -> Self {
        serde_json::from_str(include_str!("../../fixtures/lexicon.json"))
            .expect("bundled lexicon is valid json")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn get(&self, key: &str) -> Option<&LexiconEntry> {
        self.entries.get(key)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn tags(&self, key: &str) -> BTreeSet<&str> {
        self.entries
            .get(key)
            .map(|e| e.tags.iter().map(String::as_str).collect())
            .unwrap_or_default()
    }

    /// Exact lookup of a whole phrase against keys and aliases.
    pub fn resolve_exact(&self, phrase: &str) -> Option<&str> {
        let norm = normalize(phrase);
        if norm.is_empty() {
            return None;
        }
        let underscored = norm.replace([' ', '-'], "_");
        if let Some((k, _)) = self.entries.get_key_value(&underscored) {
            return Some(k);
        }
        self.entries
            .iter()
            .find(|(_, e)| e.aliases.iter().any(|a| normalize(a) == norm))
            .map(|(k, _)| k.as_str())
    }

    /// Concept mentions in free text, longest match first, left to right.
    pub fn mentions(&self, text: &str) -> Vec<String> {
        let words: Vec<String> = normalize(text).split(' ').map(str::to_string).collect();
        let mut found = Vec::new();
        let mut i = 0;
        while i < words.len() {
            let mut matched = 0;
            for len in (1..=words.len() - i).rev() {
                let phrase = words[i..i + len].join(" ");
                if let Some(k) = self.resolve_exact(&phrase) {
                    if !found.iter().any(|f: &String| f == k) {
                        found.push(k.to_string());
                    }
                    matched = len;
                    break;
                }
            }
            i += matched.max(1);
        }
        found
    }

    /// Resolves a negated phrase: exact match, else its single mention.
    pub fn resolve_phrase(&self, phrase: &str) -> Option<String> {
        if let Some(k) = self.resolve_exact(phrase) {
            return Some(k.to_string());
        }
        match self.mentions(phrase).as_slice() {
            [one] => Some(one.clone()),
            _ => None,
        }
    }
}

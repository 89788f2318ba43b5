use super::{
    CompileError, Cue, Entity, GrammarTable, NegatedSpan, NegationParse, OperatorKind, RelativeClause,
    ScopeTree, Span, TargetRole,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Word,
    Comma,
    Period,
}

struct Tok {
    text: String,
    lower: String,
    kind: Kind,
}

fn tokenize(prompt: &str) -> Result<Vec<Tok>, CompileError> {
    let mut toks = Vec::new();
    for raw in prompt.split_whitespace() {
        let word = raw.trim_end_matches([',', '.']);
        let tail = &raw[word.len()..];
        if !word.is_empty() {
            let ok = word.chars().all(|c| c.is_alphabetic() || c == '-' || c == '\'')
                && word.chars().any(char::is_alphabetic);
            if !ok {
                return Err(CompileError::Unparseable {
                    index: toks.len(),
                    token: raw.to_string(),
                    reason: "tokens must be words with optional trailing comma or period".into(),
                });
            }
            toks.push(Tok {
                text: word.to_string(),
                lower: word.to_lowercase(),
                kind: Kind::Word,
            });
        }
        for c in tail.chars() {
            toks.push(Tok {
                text: c.to_string(),
                lower: c.to_string(),
                kind: if c == ',' { Kind::Comma } else { Kind::Period },
            });
        }
    }
    if toks.iter().all(|t| t.kind != Kind::Word) {
        return Err(CompileError::Unparseable {
            index: 0,
            token: prompt.trim().to_string(),
            reason: "prompt contains no words".into(),
        });
    }
    Ok(toks)
}

struct Parser<'a> {
    g: &'a GrammarTable,
    toks: Vec<Tok>,
}

impl<'a> Parser<'a> {
    fn word(&self, i: usize) -> Option<&str> {
        self.toks
            .get(i)
            .filter(|t| t.kind == Kind::Word)
            .map(|t| t.lower.as_str())
    }

    fn is_in(&self, i: usize, set: &std::collections::BTreeSet<String>) -> bool {
        self.word(i).is_some_and(|w| set.contains(w))
    }

    fn is_object_cue(&self, i: usize) -> bool {
        self.is_in(i, &self.g.explicit_no) || self.is_in(i, &self.g.without)
    }

    fn is_cue(&self, i: usize) -> bool {
        self.is_object_cue(i) || self.is_in(i, &self.g.not) || self.is_in(i, &self.g.only)
    }

    fn is_boundary_punct(&self, i: usize) -> bool {
        self.toks.get(i).is_none_or(|t| t.kind != Kind::Word)
    }

    fn text(&self, start: usize, end: usize) -> String {
        self.toks[start..end]
            .iter()
            .filter(|t| t.kind == Kind::Word)
            .map(|t| t.text.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }

    fn span(&self, start: usize, end: usize) -> Span {
        Span {
            start,
            end,
            text: self.text(start, end),
        }
    }

    fn err(&self, index: usize, reason: &str) -> CompileError {
        CompileError::Unparseable {
            index,
            token: self.toks.get(index).map(|t| t.text.clone()).unwrap_or_default(),
            reason: reason.into(),
        }
    }

    fn ambiguous(&self, index: usize, reason: &str) -> CompileError {
        CompileError::AmbiguousScope {
            index,
            token: self.toks.get(index).map(|t| t.text.clone()).unwrap_or_default(),
            reason: reason.into(),
        }
    }

    /// Token index of a multi-word temporal cue starting at `i`, with its length.
    fn temporal_at(&self, i: usize) -> Option<(String, usize)> {
        self.g.temporal_cues.iter().find_map(|cue| {
            let parts: Vec<&str> = cue.split_whitespace().collect();
            let hit = parts
                .iter()
                .enumerate()
                .all(|(k, p)| self.word(i + k) == Some(*p));
            hit.then(|| (cue.clone(), parts.len()))
        })
    }

    fn entities(&self) -> Result<Vec<Entity>, CompileError> {
        let g = self.g;
        let mut out = Vec::new();
        let mut i = 0;
        while i < self.toks.len() {
            if !self.is_in(i, &g.determiners) {
                i += 1;
                continue;
            }
            let mut j = i + 1;
            while let Some(w) = self.word(j) {
                let stop = g.phrase_breaks.contains(w)
                    || g.relativizers.contains(w)
                    || g.copulas.contains(w)
                    || g.conjunctions.contains(w)
                    || g.contrastive.contains(w)
                    || g.determiners.contains(w)
                    || g.predicative_adjectives.contains(w)
                    || self.is_cue(j)
                    || (j > i + 1 && g.is_participle(w));
                if stop {
                    break;
                }
                j += 1;
            }
            if j == i + 1 {
                return Err(self.err(i, "determiner is not followed by a noun"));
            }
            out.push(Entity {
                span: self.span(i, j),
                head: self.toks[j - 1].lower.clone(),
            });
            i = j;
        }
        Ok(out)
    }

    /// End of the phrase governed by an object cue at `cue`.
    fn object_span_end(&self, cue: usize) -> Result<usize, CompileError> {
        let g = self.g;
        let mut j = cue + 1;
        while j < self.toks.len() && !self.is_boundary_punct(j) {
            if self.is_cue(j) || self.is_in(j, &g.relativizers) || self.is_in(j, &g.contrastive) {
                break;
            }
            if self.is_in(j, &g.conjunctions) {
                if self.is_object_cue(j + 1) {
                    break;
                }
                return Err(self.ambiguous(
                    j,
                    "coordination inside a negated phrase leaves the scope of the negation open",
                ));
            }
            j += 1;
        }
        Ok(j)
    }

    /// Entity whose span ends right before `i`, skipping a relativizer and copula.
    fn clause_head(&self, entities: &[Entity], i: usize) -> Option<usize> {
        let g = self.g;
        let mut k = i;
        if k > 0 && self.is_in(k - 1, &g.copulas) {
            k -= 1;
        }
        if k > 0 && self.is_in(k - 1, &g.relativizers) {
            k -= 1;
        }
        entities.iter().position(|e| e.span.end == k)
    }

    fn run(self) -> Result<NegationParse, CompileError> {
        let g = self.g;
        let n = self.toks.len();
        if !self.is_in(0, &g.determiners) {
            return Err(self.err(0, "prompt must open with a determiner"));
        }
        let entities = self.entities()?;

        let mut negated: Vec<NegatedSpan> = Vec::new();
        // Tokens that belong to negation machinery rather than affirmed content.
        let mut consumed = vec![false; n];
        let mut i = 0;
        while i < n {
            if self.is_object_cue(i) {
                let kind = if self.is_in(i, &g.explicit_no) {
                    OperatorKind::ExplicitNo
                } else {
                    OperatorKind::Without
                };
                let end = self.object_span_end(i)?;
                let mut content_end = end;
                let mut temporal = None;
                for k in i + 1..end {
                    if let Some((cue, len)) = self.temporal_at(k) {
                        temporal = Some(cue);
                        content_end = k;
                        debug_assert!(k + len <= end);
                        break;
                    }
                }
                if content_end == i + 1 {
                    return Err(self.err(i, "negation cue does not govern a phrase"));
                }
                let (affixes, concept_phrase) = self.strip_first(i + 1, content_end);
                let mut operators = vec![kind];
                operators.extend(std::iter::repeat_n(OperatorKind::Morphological, affixes as usize));
                negated.push(NegatedSpan {
                    span: self.span(i + 1, content_end),
                    operators,
                    target_role: TargetRole::Object,
                    cue: Cue {
                        index: i,
                        text: self.toks[i].text.clone(),
                    },
                    concept_phrase,
                    head: None,
                    temporal,
                    items: Vec::new(),
                });
                consumed[i..end].iter_mut().for_each(|c| *c = true);
                // A preposition introducing the cue ("with no") and a joining conjunction.
                if i > 0 && (self.is_in(i - 1, &g.phrase_breaks) || self.is_in(i - 1, &g.conjunctions)) {
                    consumed[i - 1] = true;
                }
                i = end;
            } else if self.is_in(i, &g.only) {
                let mut end = i + 1;
                while end < n && !self.is_boundary_punct(end) && !self.is_in(end, &g.relativizers) {
                    end += 1;
                }
                let mut items = Vec::new();
                let mut start = i + 1;
                for k in i + 1..=end {
                    if k == end || self.is_in(k, &g.conjunctions) {
                        if k == start {
                            return Err(self.err(k.min(n - 1), "empty item in `only` restriction"));
                        }
                        items.push(self.text(start, k).to_lowercase());
                        start = k + 1;
                    }
                }
                negated.push(NegatedSpan {
                    span: self.span(i + 1, end),
                    operators: vec![OperatorKind::OnlyRestrict],
                    target_role: TargetRole::CategoryComplement,
                    cue: Cue {
                        index: i,
                        text: self.toks[i].text.clone(),
                    },
                    concept_phrase: items.join(" and "),
                    head: None,
                    temporal: None,
                    items,
                });
                consumed[i] = true;
                if i > 0 && self.is_in(i - 1, &g.phrase_breaks) {
                    consumed[i - 1] = true;
                }
                i = end;
            } else if self.is_in(i, &g.not) {
                let contrastive = i > 0 && self.is_in(i - 1, &g.contrastive);
                let mut j = i;
                let mut operators = Vec::new();
                while self.is_in(j, &g.not) {
                    operators.push(if contrastive && j == i {
                        OperatorKind::ContrastiveButNot
                    } else {
                        OperatorKind::Not
                    });
                    j += 1;
                }
                let start = j;
                let mut end = start;
                while end < n
                    && !self.is_boundary_punct(end)
                    && !self.is_cue(end)
                    && !self.is_in(end, &g.conjunctions)
                    && !self.is_in(end, &g.contrastive)
                    && !self.is_in(end, &g.relativizers)
                {
                    end += 1;
                }
                if end == start {
                    return Err(self.err(i, "negation cue does not govern a phrase"));
                }
                let (affixes, concept_phrase) = self.strip_first(start, end);
                operators.extend(std::iter::repeat_n(OperatorKind::Morphological, affixes as usize));
                let first = self.first_content(start, end);
                let target_role = if self.word(first).is_some_and(|w| g.is_predicate_word(w)) {
                    TargetRole::Predicate
                } else {
                    TargetRole::Attribute
                };
                let head = if contrastive {
                    entities.first().map(|e| e.head.clone())
                } else {
                    self.clause_head(&entities, i).map(|e| entities[e].head.clone())
                };
                negated.push(NegatedSpan {
                    span: self.span(start, end),
                    operators,
                    target_role,
                    cue: Cue {
                        index: i,
                        text: self.toks[i].text.clone(),
                    },
                    concept_phrase,
                    head,
                    temporal: None,
                    items: Vec::new(),
                });
                consumed[i..end].iter_mut().for_each(|c| *c = true);
                if contrastive {
                    consumed[i - 1] = true;
                }
                self.consume_clause_frame(i, &mut consumed);
                i = end;
            } else if let Some(w) = self.word(i) {
                let (affixes, base) = g.strip_negative_affixes(w);
                let after_copula = i > 0 && self.is_in(i - 1, &g.copulas);
                if affixes > 0 && after_copula {
                    let head = self.clause_head(&entities, i).map(|e| entities[e].head.clone());
                    negated.push(NegatedSpan {
                        span: self.span(i, i + 1),
                        operators: vec![OperatorKind::Morphological; affixes as usize],
                        target_role: TargetRole::Attribute,
                        cue: Cue {
                            index: i,
                            text: self.toks[i].text.clone(),
                        },
                        concept_phrase: base,
                        head,
                        temporal: None,
                        items: Vec::new(),
                    });
                    consumed[i] = true;
                    self.consume_clause_frame(i, &mut consumed);
                }
                i += 1;
            } else {
                i += 1;
            }
        }

        // Conjunctions joining two negations are structure, not content.
        for k in 0..n {
            if self.is_in(k, &g.conjunctions) && k + 1 < n && consumed[k + 1] && k > 0 {
                let prev = (0..k).rev().find(|&p| self.toks[p].kind == Kind::Word);
                if prev.is_some_and(|p| consumed[p]) {
                    consumed[k] = true;
                }
            }
        }

        let mut clauses = Vec::new();
        for r in 0..n {
            if !self.is_in(r, &g.relativizers) {
                continue;
            }
            let Some(ante) = entities.iter().position(|e| e.span.end == r) else {
                continue;
            };
            let e = &entities[ante];
            let coordinated = e.span.start > 0
                && self.is_in(e.span.start - 1, &g.conjunctions)
                && entities.iter().any(|o| o.span.end + 1 == e.span.start);
            if coordinated {
                return Err(self.ambiguous(r, "relative clause follows coordinated antecedents"));
            }
            let clause_end = (r + 1..n).find(|&k| self.is_boundary_punct(k)).unwrap_or(n);
            let governed = negated
                .iter()
                .enumerate()
                .filter(|(_, s)| s.cue.index > r && s.cue.index < clause_end)
                .map(|(k, _)| k)
                .collect();
            clauses.push(RelativeClause {
                relativizer: r,
                antecedent: ante,
                negated: governed,
            });
        }

        let mut affirmed = Vec::new();
        let mut k = 0;
        while k < n {
            if consumed[k] || self.toks[k].kind != Kind::Word {
                k += 1;
                continue;
            }
            let start = k;
            while k < n && !consumed[k] && self.toks[k].kind == Kind::Word {
                k += 1;
            }
            let mut end = k;
            while end > start && self.is_in(end - 1, &g.phrase_breaks) {
                end -= 1;
            }
            if end > start {
                affirmed.push(self.span(start, end));
            }
        }
        for s in negated.iter().filter(|s| s.target_role == TargetRole::CategoryComplement) {
            affirmed.push(s.span.clone());
        }
        affirmed.sort_by_key(|s| s.start);

        let temporal_cues = (0..n)
            .filter_map(|k| {
                self.temporal_at(k).map(|(text, _)| Cue { index: k, text })
            })
            .collect();

        Ok(NegationParse {
            prompt: self.toks.iter().fold(String::new(), |mut acc, t| {
                if !acc.is_empty() && t.kind == Kind::Word {
                    acc.push(' ');
                }
                acc.push_str(&t.text);
                acc
            }),
            tokens: self.toks.iter().map(|t| t.text.clone()).collect(),
            affirmed,
            negated,
            scope: ScopeTree { entities, clauses },
            temporal_cues,
        })
    }

    /// Marks a preceding "that is" frame as structure.
    fn consume_clause_frame(&self, i: usize, consumed: &mut [bool]) {
        let mut k = i;
        if k > 0 && self.is_in(k - 1, &self.g.copulas) {
            k -= 1;
            consumed[k] = true;
        }
        if k > 0 && self.is_in(k - 1, &self.g.relativizers) {
            consumed[k - 1] = true;
        }
    }

    fn first_content(&self, start: usize, end: usize) -> usize {
        (start..end)
            .find(|&k| !self.is_in(k, &self.g.degree_adverbs))
            .unwrap_or(start)
    }

    /// Strips negative affixes from the first content word of `[start, end)`.
    fn strip_first(&self, start: usize, end: usize) -> (u32, String) {
        let first = self.first_content(start, end);
        let mut affixes = 0;
        let words: Vec<String> = (start..end)
            .filter_map(|k| {
                let w = self.word(k)?;
                if k == first {
                    let (n, base) = self.g.strip_negative_affixes(w);
                    affixes = n;
                    Some(base)
                } else {
                    Some(w.to_string())
                }
            })
            .collect();
        (affixes, words.join(" "))
    }
}

/// Splits a prompt into affirmed content, negated spans and scope structure.
pub fn parse(prompt: &str, grammar: &GrammarTable) -> Result<NegationParse, CompileError> {
    let toks = tokenize(prompt)?;
    Parser { g: grammar, toks }.run()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(prompt: &str) -> NegationParse {
        parse(prompt, &GrammarTable::default()).unwrap()
    }

    #[test]
    fn explicit_no_object() {
        let r = p("A highway at sunset, with no vehicles.");
        assert_eq!(r.affirmed.len(), 1);
        assert_eq!(r.affirmed[0].text, "A highway at sunset");
        assert_eq!(r.negated.len(), 1);
        let n = &r.negated[0];
        assert_eq!(n.canonical(), "vehicles");
        assert_eq!(n.depth(), 1);
        assert_eq!(n.operators, vec![OperatorKind::ExplicitNo]);
        assert_eq!(n.target_role, TargetRole::Object);
        assert_eq!(n.cue.text, "no");
    }

    #[test]
    fn double_negation_through_morphology() {
        let r = p("A stage that is not unlit.");
        let n = &r.negated[0];
        assert_eq!(n.canonical(), "lit(stage)");
        assert_eq!(n.depth(), 2);
        assert_eq!(n.operators, vec![OperatorKind::Not, OperatorKind::Morphological]);
        assert_eq!(n.target_role, TargetRole::Attribute);
        assert_eq!(r.affirmed[0].text, "A stage");
    }

    #[test]
    fn only_restriction() {
        let r = p("A scene featuring only natural elements.");
        let n = &r.negated[0];
        assert_eq!(n.canonical(), "complement(natural elements)");
        assert_eq!(n.operators, vec![OperatorKind::OnlyRestrict]);
        assert_eq!(n.target_role, TargetRole::CategoryComplement);
        let r = p("A meadow under the night sky with only grass and stars.");
        assert_eq!(r.negated[0].items, vec!["grass", "stars"]);
    }

    #[test]
    fn multiple_negations_keep_source_order() {
        let r = p("A classroom scene with no students, no teacher, and no books.");
        let got: Vec<_> = r.negated.iter().map(|n| n.canonical()).collect();
        assert_eq!(got, vec!["students", "teacher", "books"]);
        assert_eq!(r.affirmed.len(), 1);
        assert_eq!(r.affirmed[0].text, "A classroom scene");
    }

    #[test]
    fn temporal_cue_attaches() {
        let r = p("A ski slope after snowfall, with no ski tracks appearing.");
        assert_eq!(r.negated[0].concept_phrase, "ski tracks");
        assert_eq!(r.negated[0].temporal.as_deref(), Some("appearing"));
    }

    #[test]
    fn contrastive_predicate() {
        let r = p("A person holding a phone but not using it.");
        let n = &r.negated[0];
        assert_eq!(n.operators, vec![OperatorKind::ContrastiveButNot]);
        assert_eq!(n.target_role, TargetRole::Predicate);
        assert_eq!(n.concept_phrase, "using it");
        assert_eq!(r.affirmed[0].text, "A person holding a phone");
    }

    #[test]
    fn relative_clause_records_antecedent() {
        let r = p("A teacher helping a student who is not paying attention.");
        assert_eq!(r.scope.clauses.len(), 1);
        let c = &r.scope.clauses[0];
        assert_eq!(r.scope.entities[c.antecedent].head, "student");
        assert_eq!(c.negated, vec![0]);
        assert_eq!(r.affirmed[0].text, "A teacher helping a student");
    }

    #[test]
    fn spans_do_not_overlap() {
        let r = p("A mountain cabin with no doors, no windows, and no chimney.");
        let mut all: Vec<&Span> = r.affirmed.iter().collect();
        all.extend(r.negated.iter().map(|n| &n.span));
        for (a, x) in all.iter().enumerate() {
            for y in &all[a + 1..] {
                assert!(!x.overlaps(y), "{x:?} overlaps {y:?}");
            }
        }
    }

    #[test]
    fn errors_name_offending_token() {
        let g = GrammarTable::default();
        match parse("A highway with no vehicles #2.", &g) {
            Err(CompileError::Unparseable { token, index, .. }) => {
                assert_eq!(token, "#2.");
                assert_eq!(index, 5);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse("", &g), Err(CompileError::Unparseable { .. })));
        assert!(matches!(parse("highway with no cars", &g), Err(CompileError::Unparseable { index: 0, .. })));
        assert!(matches!(parse("A street with no", &g), Err(CompileError::Unparseable { index: 3, .. })));
    }

    #[test]
    fn coordination_under_negation_is_ambiguous() {
        let g = GrammarTable::default();
        match parse("A street with no cars and trees.", &g) {
            Err(CompileError::AmbiguousScope { token, .. }) => assert_eq!(token, "and"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse("A boy and a girl who are not smiling.", &g),
            Err(CompileError::AmbiguousScope { .. })
        ));
    }
}

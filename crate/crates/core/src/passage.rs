//! Passage-retrieval baseline: keyword windows, pattern-validated candidates
//! and Gaussian term-proximity ranking.

use std::collections::BTreeSet;

use crate::age::{AgeAnswer, AgeKind};
use crate::corpus::{is_age_keyword, parse_integer_token, tokenize, Document, Sentence, Token};
use crate::error::{Error, Result};
use crate::qa::AgeAnswerer;

pub const DEFAULT_PATTERNS: &str = include_str!("../data/age_patterns.tsv");
pub const DEFAULT_SIZES: [usize; 3] = [10, 20, 30];
pub const VALUE_RANGE: std::ops::RangeInclusive<u32> = 10..=100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    X,
    Y,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Element {
    Literal(String),
    Placeholder(Slot),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgePattern {
    pub id: usize,
    pub kind: AgeKind,
    pub template: String,
    pub capture: Slot,
    elements: Vec<Element>,
}

impl AgePattern {
    pub fn new(id: usize, kind: AgeKind, template: &str, capture: Slot) -> Result<AgePattern> {
        let elements: Vec<Element> = tokenize(template)
            .iter()
            .map(|t| match t.text.as_str() {
                "X" => Element::Placeholder(Slot::X),
                "Y" => Element::Placeholder(Slot::Y),
                _ => Element::Literal(t.norm()),
            })
            .collect();
        if !elements.contains(&Element::Placeholder(capture)) {
            return Err(Error::input("pattern", format!("template {template:?} lacks its capture slot")));
        }
        Ok(AgePattern { id, kind, template: template.to_string(), capture, elements })
    }

    /// Value captured when the pattern matches at `tokens[at..]` without
    /// running past `limit`, provided it lies in [10, 100].
    pub fn match_at(&self, tokens: &[&Token], at: usize, limit: usize) -> Option<(usize, u32)> {
        if at + self.elements.len() > limit {
            return None;
        }
        let mut captured = None;
        for (k, el) in self.elements.iter().enumerate() {
            let tok = tokens[at + k];
            match el {
                Element::Literal(lit) => {
                    if tok.norm() != *lit {
                        return None;
                    }
                }
                Element::Placeholder(slot) => {
                    let v = parse_integer_token(tok)?;
                    if *slot == self.capture {
                        captured = Some((at + k, v));
                    }
                }
            }
        }
        captured.filter(|(_, v)| VALUE_RANGE.contains(v))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternTable {
    pub patterns: Vec<AgePattern>,
}

impl PatternTable {
    /// Parses `kind<TAB>template<TAB>capture` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<PatternTable> {
        let mut patterns = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let field = format!("pattern line {}", n + 1);
            let cols: Vec<&str> = line.split('\t').collect();
            let [kind, template, capture] = cols[..] else {
                return Err(Error::input(field, "expected 3 tab-separated columns"));
            };
            let kind: AgeKind = kind.parse().map_err(|_| Error::input(&field, format!("bad kind {kind:?}")))?;
            let capture = match capture {
                "X" => Slot::X,
                "Y" => Slot::Y,
                other => return Err(Error::input(&field, format!("bad capture role {other:?}"))),
            };
            patterns.push(AgePattern::new(patterns.len(), kind, template, capture).map_err(|_| {
                Error::input(&field, format!("template {template:?} lacks its capture slot"))
            })?);
        }
        Ok(PatternTable { patterns })
    }

    pub fn default_table() -> PatternTable {
        PatternTable::parse(DEFAULT_PATTERNS).expect("built-in pattern table parses")
    }

    /// The bare `X-Y` range pattern: `X` answers min and `Y` answers max.
    pub fn range_only() -> PatternTable {
        PatternTable::parse("min\tX-Y\tX\nmax\tX-Y\tY\n").expect("range pattern parses")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProximityConfig {
    /// Gaussian bandwidth, strictly positive.
    pub sigma: f64,
    pub sizes: Vec<usize>,
}

impl Default for ProximityConfig {
    fn default() -> Self {
        ProximityConfig { sigma: 1.0, sizes: DEFAULT_SIZES.to_vec() }
    }
}

/// Document tokens in reading order with their sentence of origin.
pub struct DocumentTokens<'a> {
    pub tokens: Vec<&'a Token>,
    pub sentences: Vec<&'a Sentence>,
}

impl<'a> DocumentTokens<'a> {
    pub fn new(doc: &'a Document) -> Self {
        let mut tokens = Vec::new();
        let mut sentences = Vec::new();
        for s in doc.sentences() {
            for t in &s.tokens {
                tokens.push(t);
                sentences.push(s);
            }
        }
        DocumentTokens { tokens, sentences }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn query_positions(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| is_age_keyword(&self.tokens[i].text)).collect()
    }
}

/// A token window `[start, end)` around at least one query-term occurrence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Passage {
    pub start: usize,
    pub end: usize,
    pub size: usize,
    pub query_positions: Vec<usize>,
}

/// One window of each size centred on every query-term occurrence, clamped
/// to the document and deduplicated by `(start, size)`.
pub fn retrieve_passages(doc: &DocumentTokens<'_>, sizes: &[usize]) -> Vec<Passage> {
    let n = doc.len();
    let occurrences = doc.query_positions();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for &size in sizes {
        for &p in &occurrences {
            let start = if n <= size { 0 } else { p.saturating_sub(size / 2).min(n - size) };
            let end = (start + size).min(n);
            if seen.insert((start, size)) {
                let query_positions = occurrences.iter().copied().filter(|q| (start..end).contains(q)).collect();
                out.push(Passage { start, end, size, query_positions });
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PassageCandidate {
    /// Document token position.
    pub position: usize,
    pub value: u32,
    pub pattern: usize,
}

pub fn validate_candidates(
    passage: &Passage,
    doc: &DocumentTokens<'_>,
    kind: AgeKind,
    table: &PatternTable,
) -> Vec<PassageCandidate> {
    let mut out: Vec<PassageCandidate> = Vec::new();
    for at in passage.start..passage.end {
        for pat in table.patterns.iter().filter(|p| p.kind == kind) {
            if let Some((position, value)) = pat.match_at(&doc.tokens, at, passage.end) {
                if !out.iter().any(|c| c.position == position) {
                    out.push(PassageCandidate { position, value, pattern: pat.id });
                }
            }
        }
    }
    out
}

/// Mean over query-term occurrences of `exp(-(p_c - p_q)^2 / sigma)`; zero
/// when there are no occurrences.
pub fn proximity_score(candidate: usize, query_positions: &[usize], sigma: f64) -> f64 {
    if query_positions.is_empty() {
        return 0.0;
    }
    let sum: f64 = query_positions
        .iter()
        .map(|&q| {
            let d = candidate as f64 - q as f64;
            (-(d * d) / sigma).exp()
        })
        .sum();
    sum / query_positions.len() as f64
}

pub fn extract_age_passage(doc: &Document, kind: AgeKind, cfg: &ProximityConfig, table: &PatternTable) -> Option<AgeAnswer> {
    let tokens = DocumentTokens::new(doc);
    let mut best: Option<(f64, PassageCandidate)> = None;
    for passage in retrieve_passages(&tokens, &cfg.sizes) {
        for c in validate_candidates(&passage, &tokens, kind, table) {
            let score = proximity_score(c.position, &passage.query_positions, cfg.sigma);
            let better = match best {
                None => true,
                Some((bs, bc)) => score > bs || (score == bs && c.position < bc.position),
            };
            if better {
                best = Some((score, c));
            }
        }
    }
    best.map(|(score, c)| {
        let tok = tokens.tokens[c.position];
        AgeAnswer {
            value: c.value,
            confidence: score.clamp(0.0, 1.0),
            kind,
            sentence_index: tokens.sentences[c.position].index,
            span: (tok.start, tok.end),
        }
    })
}

/// Answers from the first match of a pattern table inside a sentence, with
/// confidence 1. With [`PatternTable::range_only`] this is the `X-Y`
/// heuristic that stands in for the QA scorer in ablation runs.
pub struct PatternAnswerer {
    pub table: PatternTable,
}

impl AgeAnswerer for PatternAnswerer {
    fn answer(&self, s: &Sentence, kind: AgeKind) -> Option<AgeAnswer> {
        let tokens: Vec<&Token> = s.tokens.iter().collect();
        (0..tokens.len()).find_map(|at| {
            self.table.patterns.iter().filter(|p| p.kind == kind).find_map(|p| {
                p.match_at(&tokens, at, tokens.len()).map(|(pos, value)| AgeAnswer {
                    value,
                    confidence: 1.0,
                    kind,
                    sentence_index: s.index,
                    span: (tokens[pos].start, tokens[pos].end),
                })
            })
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::SectionKind;

    fn doc(text: &str) -> Document {
        Document::from_sections("d", vec![(SectionKind::Method, vec![text])])
    }

    fn candidates(text: &str, kind: AgeKind) -> Vec<u32> {
        let d = doc(text);
        let toks = DocumentTokens::new(&d);
        let p = Passage { start: 0, end: toks.len(), size: toks.len(), query_positions: vec![] };
        validate_candidates(&p, &toks, kind, &PatternTable::default_table())
            .iter()
            .map(|c| c.value)
            .collect()
    }

    #[test]
    fn default_table_parses() {
        let t = PatternTable::default_table();
        assert_eq!(t.patterns.len(), 18);
        assert_eq!(t.patterns.iter().filter(|p| p.kind == AgeKind::Min).count(), 9);
    }

    #[test]
    fn pattern_validation() {
        assert_eq!(candidates("participants older than 17 years", AgeKind::Min), [17]);
        assert!(candidates("greater than 120", AgeKind::Min).is_empty());
        assert_eq!(candidates("aged 18-23 years", AgeKind::Max), [23]);
        assert_eq!(candidates("aged 18\u{2013}23 years", AgeKind::Min), [18]);
        assert_eq!(candidates("between 18 and 60 years", AgeKind::Max), [60]);
        assert_eq!(candidates("age \u{2265} 18 years", AgeKind::Min), [18]);
        assert_eq!(candidates("age > 17", AgeKind::Min), [17]);
        assert!(candidates("age >= 17", AgeKind::Max).is_empty());
        assert_eq!(candidates("age <= 65", AgeKind::Max), [65]);
    }

    #[test]
    fn bad_pattern_lines() {
        assert!(PatternTable::parse("min\tat least X").is_err());
        assert!(PatternTable::parse("mid\tat least X\tX").is_err());
        assert!(PatternTable::parse("min\tat least X\tY").is_err());
        assert!(PatternTable::parse("min\tat least X\tZ").is_err());
    }

    #[test]
    fn passages_per_size_and_clamped() {
        let words: Vec<&str> = (0..50).map(|i| if i == 2 { "aged" } else { "word" }).collect();
        let d = doc(&words.join(" "));
        let toks = DocumentTokens::new(&d);
        let ps = retrieve_passages(&toks, &DEFAULT_SIZES);
        assert_eq!(ps.len(), 3);
        assert_eq!((ps[0].start, ps[0].end), (0, 10));
        assert!(ps.iter().all(|p| p.query_positions == [2]));
    }

    #[test]
    fn no_query_terms_no_passages() {
        let d = doc("Nothing relevant here.");
        assert!(retrieve_passages(&DocumentTokens::new(&d), &DEFAULT_SIZES).is_empty());
    }

    #[test]
    fn proximity_examples() {
        assert!((proximity_score(2, &[1, 3], 1.0) - (-1f64).exp()).abs() < 1e-12);
        assert_eq!(proximity_score(4, &[4], 1.0), 1.0);
        assert!((proximity_score(0, &[5], 1.0) - (-25f64).exp()).abs() < 1e-12);
        assert_eq!(proximity_score(0, &[], 1.0), 0.0);
    }

    #[test]
    fn single_candidate_document() {
        let d = doc("We recruited participants older than 17 years.");
        let a = extract_age_passage(&d, AgeKind::Min, &ProximityConfig::default(), &PatternTable::default_table());
        assert_eq!(a.map(|a| a.value), Some(17));
        assert!(extract_age_passage(&d, AgeKind::Max, &ProximityConfig::default(), &PatternTable::default_table())
            .is_none());
    }

    #[test]
    fn range_answerer() {
        let s = Sentence::new("Participants were 83 smokers, who were 18-23 years old.", SectionKind::Method, 4);
        let a = PatternAnswerer { table: PatternTable::range_only() };
        assert_eq!(a.answer(&s, AgeKind::Min).unwrap().value, 18);
        let max = a.answer(&s, AgeKind::Max).unwrap();
        assert_eq!((max.value, max.confidence, max.sentence_index), (23, 1.0, 4));
        assert_eq!(&s.text[max.span.0..max.span.1], "23");
    }
}

//! Per-article orchestration: sentence selection, question answering,
//! speculation filtering and min/max aggregation.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::age::{AgeAnswer, AgeKind};
use crate::corpus::{tokenize, Document, SectionKind, Sentence, Token};
use crate::error::{Error, Result};
use crate::qa::AgeAnswerer;
use crate::sentfinder::MaxEntModel;
use crate::supervision::SentenceLabel;

pub const DEFAULT_THRESHOLD: f64 = 0.5;
pub const DEFAULT_SECTIONS: [SectionKind; 3] = [SectionKind::Abstract, SectionKind::Method, SectionKind::Result];
pub const DEFAULT_CUES: [&str; 8] = ["if", "at least", "must", "had to", "has to", "have to", "need", "needs"];

/// Speculation cue words and phrases, matched as whole-token sequences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpeculationCueSet {
    cues: Vec<(String, Vec<String>)>,
}

impl Default for SpeculationCueSet {
    fn default() -> Self {
        SpeculationCueSet::new(DEFAULT_CUES).expect("default cues are non-empty")
    }
}

impl SpeculationCueSet {
    pub fn new<S: AsRef<str>>(cues: impl IntoIterator<Item = S>) -> Result<SpeculationCueSet> {
        let mut out = Vec::new();
        for cue in cues {
            let cue = cue.as_ref().trim().to_lowercase();
            let tokens: Vec<String> = tokenize(&cue).iter().map(Token::norm).collect();
            if tokens.is_empty() {
                return Err(Error::input("cues", "empty cue"));
            }
            out.push((cue, tokens));
        }
        Ok(SpeculationCueSet { cues: out })
    }

    /// One cue per line; blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Result<SpeculationCueSet> {
        SpeculationCueSet::new(text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')))
    }

    pub fn cues(&self) -> impl Iterator<Item = &str> {
        self.cues.iter().map(|(c, _)| c.as_str())
    }

    /// The first cue, in list order, occurring in `text`.
    pub fn find_in(&self, text: &str) -> Option<&str> {
        let words: Vec<String> = tokenize(text).iter().map(Token::norm).collect();
        self.cues
            .iter()
            .find(|(_, seq)| words.windows(seq.len()).any(|w| w == seq.as_slice()))
            .map(|(c, _)| c.as_str())
    }
}

fn is_clause_boundary(c: char) -> bool {
    matches!(c, ',' | ';' | ':' | '(' | ')')
}

/// Byte range of the clause around `span`: the nearest comma, semicolon,
/// colon or parenthesis on each side, or the sentence edge.
pub fn clause_bounds(text: &str, span: (usize, usize)) -> (usize, usize) {
    let start = text[..span.0].rfind(is_clause_boundary).map_or(0, |i| i + 1);
    let end = text[span.1..].find(is_clause_boundary).map_or(text.len(), |i| span.1 + i);
    (start, end)
}

pub fn extract_clause(text: &str, span: (usize, usize)) -> &str {
    let (start, end) = clause_bounds(text, span);
    text[start..end].trim()
}

/// The cue that makes `ans` speculative, if any.
pub fn speculation_cue<'c>(ans: &AgeAnswer, s: &Sentence, cues: &'c SpeculationCueSet) -> Option<&'c str> {
    cues.find_in(extract_clause(&s.text, ans.span))
}

pub fn filter_speculative(ans: AgeAnswer, s: &Sentence, cues: &SpeculationCueSet) -> Option<AgeAnswer> {
    speculation_cue(&ans, s, cues).is_none().then_some(ans)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Speculation,
    Threshold,
    Rank,
    Conflict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub stage: Stage,
    pub answer: AgeAnswer,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ArticlePrediction {
    pub id: String,
    pub min: Option<AgeAnswer>,
    pub max: Option<AgeAnswer>,
    pub audit: Vec<AuditEntry>,
}

impl ArticlePrediction {
    pub fn get(&self, kind: AgeKind) -> Option<&AgeAnswer> {
        match kind {
            AgeKind::Min => self.min.as_ref(),
            AgeKind::Max => self.max.as_ref(),
        }
    }

    pub fn to_record(&self, doc: &Document) -> PredictionRecord {
        let evidence = |a: &AgeAnswer| EvidenceRecord {
            value: a.value,
            confidence: a.confidence,
            sentence_index: a.sentence_index,
            evidence: doc.sentence(a.sentence_index).map(|s| s.text.clone()).unwrap_or_default(),
        };
        PredictionRecord {
            id: self.id.clone(),
            min: self.min.as_ref().map(evidence),
            max: self.max.as_ref().map(evidence),
            audit: self
                .audit
                .iter()
                .map(|e| AuditRecord {
                    stage: e.stage,
                    kind: e.answer.kind,
                    value: e.answer.value,
                    confidence: e.answer.confidence,
                    sentence_index: e.answer.sentence_index,
                    reason: e.reason.clone(),
                })
                .collect(),
        }
    }
}

/// One line of a predictions file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionRecord {
    pub id: String,
    pub min: Option<EvidenceRecord>,
    pub max: Option<EvidenceRecord>,
    #[serde(default)]
    pub audit: Vec<AuditRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceRecord {
    pub value: u32,
    pub confidence: f64,
    pub sentence_index: usize,
    pub evidence: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub stage: Stage,
    pub kind: AgeKind,
    pub value: u32,
    pub confidence: f64,
    pub sentence_index: usize,
    pub reason: String,
}

fn rank_order(a: &AgeAnswer, b: &AgeAnswer) -> std::cmp::Ordering {
    b.confidence
        .total_cmp(&a.confidence)
        .then(a.sentence_index.cmp(&b.sentence_index))
        .then(a.span.cmp(&b.span))
}

fn best_answer(answers: Vec<AgeAnswer>, threshold: f64, audit: &mut Vec<AuditEntry>) -> Option<AgeAnswer> {
    let mut kept = Vec::new();
    for a in answers {
        if a.confidence < threshold {
            let reason = format!("confidence {} below {threshold}", a.confidence);
            audit.push(AuditEntry { stage: Stage::Threshold, answer: a, reason });
        } else {
            kept.push(a);
        }
    }
    kept.sort_by(rank_order);
    let mut kept = kept.into_iter();
    let best = kept.next()?;
    for a in kept {
        let reason = format!("outranked by {} at {}", best.value, best.confidence);
        audit.push(AuditEntry { stage: Stage::Rank, answer: a, reason });
    }
    Some(best)
}

/// Thresholds, keeps the most confident answer per kind, and resolves a
/// min ≥ max conflict in favour of the more confident answer (min on ties).
pub fn aggregate(min_answers: Vec<AgeAnswer>, max_answers: Vec<AgeAnswer>, threshold: f64) -> ArticlePrediction {
    let mut audit = Vec::new();
    let mut min = best_answer(min_answers, threshold, &mut audit);
    let mut max = best_answer(max_answers, threshold, &mut audit);
    if let (Some(lo), Some(hi)) = (&min, &max) {
        if lo.value >= hi.value {
            let reason = format!("min {} not below max {}", lo.value, hi.value);
            let loser = if hi.confidence > lo.confidence { min.take() } else { max.take() };
            audit.push(AuditEntry { stage: Stage::Conflict, answer: loser.expect("both present"), reason });
        }
    }
    ArticlePrediction { id: String::new(), min, max, audit }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FilterOrder {
    /// Speculative answers are dropped before ranking.
    #[default]
    BeforeAggregate,
    /// Only the aggregated survivors are checked.
    AfterAggregate,
}

impl FromStr for FilterOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "before" => Ok(FilterOrder::BeforeAggregate),
            "after" => Ok(FilterOrder::AfterAggregate),
            other => Err(Error::input("filter-order", format!("expected `before` or `after`, found {other:?}"))),
        }
    }
}

impl fmt::Display for FilterOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FilterOrder::BeforeAggregate => "before",
            FilterOrder::AfterAggregate => "after",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub threshold: f64,
    pub sections: BTreeSet<SectionKind>,
    /// `None` disables the speculation filter.
    pub cues: Option<SpeculationCueSet>,
    pub filter_order: FilterOrder,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            threshold: DEFAULT_THRESHOLD,
            sections: DEFAULT_SECTIONS.into_iter().collect(),
            cues: Some(SpeculationCueSet::default()),
            filter_order: FilterOrder::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::input("threshold", format!("{} is outside [0, 1]", self.threshold)));
        }
        Ok(())
    }
}

/// Keyword sentences from the allowed sections, further restricted to those
/// the classifier marks positive when one is given.
pub fn select_sentences<'d>(
    doc: &'d Document,
    sentfinder: Option<&MaxEntModel>,
    sections: &BTreeSet<SectionKind>,
) -> Vec<&'d Sentence> {
    doc.sentences()
        .filter(|s| sections.contains(&s.section) && s.has_age_keyword())
        .filter(|s| sentfinder.is_none_or(|m| m.classify(s).0 == SentenceLabel::Positive))
        .collect()
}

/// Runs the full extraction over one document. Passing no sentence
/// classifier sends every keyword sentence of the allowed sections to the
/// answerer.
pub fn run_pipeline(
    doc: &Document,
    sentfinder: Option<&MaxEntModel>,
    answerer: &dyn AgeAnswerer,
    config: &PipelineConfig,
) -> ArticlePrediction {
    let mut spec_audit = Vec::new();
    let mut answers = [Vec::new(), Vec::new()];
    for s in select_sentences(doc, sentfinder, &config.sections) {
        for (k, kind) in AgeKind::BOTH.into_iter().enumerate() {
            let Some(ans) = answerer.answer(s, kind) else { continue };
            match (&config.cues, config.filter_order) {
                (Some(cues), FilterOrder::BeforeAggregate) => match speculation_cue(&ans, s, cues) {
                    Some(cue) => {
                        let reason = format!("cue {cue:?} in clause");
                        spec_audit.push(AuditEntry { stage: Stage::Speculation, answer: ans, reason });
                    }
                    None => answers[k].push(ans),
                },
                _ => answers[k].push(ans),
            }
        }
    }
    let [min, max] = answers;
    let mut pred = aggregate(min, max, config.threshold);
    if let (Some(cues), FilterOrder::AfterAggregate) = (&config.cues, config.filter_order) {
        for slot in [&mut pred.min, &mut pred.max] {
            let Some(ans) = slot.as_ref() else { continue };
            let s = doc.sentence(ans.sentence_index).expect("answer sentence exists");
            if let Some(cue) = speculation_cue(ans, s, cues) {
                let reason = format!("cue {cue:?} in clause");
                spec_audit.push(AuditEntry { stage: Stage::Speculation, answer: slot.take().unwrap(), reason });
            }
        }
    }
    spec_audit.append(&mut pred.audit);
    pred.audit = spec_audit;
    pred.id = doc.id.clone();
    pred
}

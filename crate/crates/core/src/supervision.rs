//! Distant supervision from clinical study registry records.
//!
//! Registry records pair free-text eligibility criteria with structured
//! minimum/maximum ages. Aligning the structured value with its occurrence in
//! the text yields three training sets: keyword clauses for the sentence
//! classifier, BIO-labelled token sequences for the CRF, and span-annotated
//! question/answer pairs for the QA scorer.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::age::AgeKind;
use crate::corpus::{is_age_keyword, split_sentences, tokenize, Token};
use crate::crf::BioLabel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AgeUnit {
    Years,
    Months,
    Weeks,
    Days,
}

impl FromStr for AgeUnit {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        match s.to_ascii_lowercase().as_str() {
            "year" | "years" => Ok(AgeUnit::Years),
            "month" | "months" => Ok(AgeUnit::Months),
            "week" | "weeks" => Ok(AgeUnit::Weeks),
            "day" | "days" => Ok(AgeUnit::Days),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegistryAge {
    pub value: u32,
    pub unit: AgeUnit,
}

impl RegistryAge {
    pub fn years(&self) -> Option<u32> {
        (self.unit == AgeUnit::Years).then_some(self.value)
    }
}

/// A registry record as it appears in the newline-delimited input file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegistryRecordInput {
    pub nct_id: String,
    pub criteria: String,
    pub minimum_age: String,
    pub maximum_age: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClinicalRecord {
    pub nct_id: String,
    pub criteria_text: String,
    pub min_age: Option<RegistryAge>,
    pub max_age: Option<RegistryAge>,
    pub description: Option<String>,
}

impl ClinicalRecord {
    pub fn age(&self, kind: AgeKind) -> Option<RegistryAge> {
        match kind {
            AgeKind::Min => self.min_age,
            AgeKind::Max => self.max_age,
        }
    }

    /// The annotated age of `kind` if it is given in whole years.
    pub fn age_in_years(&self, kind: AgeKind) -> Option<u32> {
        self.age(kind).and_then(|a| a.years())
    }
}

/// Parses registry age strings such as `"21 Years"`; `"N/A"` and the empty
/// string mean no age.
pub fn parse_age(field: &str, raw: &str) -> Result<Option<RegistryAge>> {
    let s = raw.trim();
    if s.is_empty() || s.eq_ignore_ascii_case("n/a") {
        return Ok(None);
    }
    let mut parts = s.split_whitespace();
    let (Some(num), Some(unit), None) = (parts.next(), parts.next(), parts.next()) else {
        return Err(Error::input(field, format!("unparseable age {raw:?}")));
    };
    let value: u32 = num
        .parse()
        .map_err(|_| Error::input(field, format!("unparseable age value {num:?}")))?;
    let unit: AgeUnit = unit
        .parse()
        .map_err(|_| Error::input(field, format!("unknown age unit {unit:?}")))?;
    Ok(Some(RegistryAge { value, unit }))
}

pub fn parse_record(raw: &RegistryRecordInput) -> Result<ClinicalRecord> {
    Ok(ClinicalRecord {
        nct_id: raw.nct_id.clone(),
        criteria_text: raw.criteria.clone(),
        min_age: parse_age("minimum_age", &raw.minimum_age)?,
        max_age: parse_age("maximum_age", &raw.maximum_age)?,
        description: raw.description.clone(),
    })
}

/// Parses newline-delimited registry records. Malformed JSON is fatal;
/// records with unparseable ages are skipped with a warning and counted in
/// the second return value.
pub fn load_records(content: &str) -> Result<(Vec<ClinicalRecord>, usize)> {
    let mut records = Vec::new();
    let mut skipped = 0;
    for (n, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let raw: RegistryRecordInput = serde_json::from_str(line)
            .map_err(|e| Error::input(format!("line {}", n + 1), e.to_string()))?;
        match parse_record(&raw) {
            Ok(r) => records.push(r),
            Err(e) => {
                log::warn!("skipping registry record {} (line {}): {e}", raw.nct_id, n + 1);
                skipped += 1;
            }
        }
    }
    Ok((records, skipped))
}

const BULLETS: &[char] = &['-', '*', '\u{2022}'];

/// Splits eligibility criteria into clauses: bullets at line starts and
/// blank lines delimit segments, `"; -"` splits within a segment, and each
/// piece is then sentence-split. Wrapped continuation lines are joined.
pub fn criteria_clauses(criteria: &str) -> Vec<String> {
    let mut segments: Vec<String> = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    let flush = |current: &mut Vec<&str>, segments: &mut Vec<String>| {
        if !current.is_empty() {
            segments.push(current.join(" "));
            current.clear();
        }
    };
    for line in criteria.lines() {
        let t = line.trim();
        if t.is_empty() {
            flush(&mut current, &mut segments);
        } else if let Some(rest) = t.strip_prefix(BULLETS) {
            flush(&mut current, &mut segments);
            current.push(rest.trim());
        } else {
            current.push(t);
        }
    }
    flush(&mut current, &mut segments);

    segments
        .iter()
        .flat_map(|seg| seg.split("; -").map(str::to_string).collect::<Vec<_>>())
        .flat_map(|piece| split_sentences(piece.trim()))
        .collect()
}

fn value_token<'a>(tokens: &'a [Token], value: u32) -> Option<&'a Token> {
    let text = value.to_string();
    tokens.iter().find(|t| t.text == text)
}

/// The first clause that contains both the annotated age (as a standalone
/// digit token) and an age keyword. Requires the age in whole years.
pub fn select_age_clause(record: &ClinicalRecord, kind: AgeKind) -> Option<String> {
    let value = record.age_in_years(kind)?;
    criteria_clauses(&record.criteria_text).into_iter().find(|clause| {
        let tokens = tokenize(clause);
        value_token(&tokens, value).is_some() && tokens.iter().any(|t| is_age_keyword(&t.text))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SentenceLabel {
    Positive,
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExampleKind {
    Min,
    Max,
    None,
}

impl From<AgeKind> for ExampleKind {
    fn from(k: AgeKind) -> Self {
        match k {
            AgeKind::Min => ExampleKind::Min,
            AgeKind::Max => ExampleKind::Max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceExample {
    pub text: String,
    pub label: SentenceLabel,
    pub kind: ExampleKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Quotas {
    pub min: usize,
    pub max: usize,
    pub negative: usize,
}

impl Default for Quotas {
    fn default() -> Self {
        Quotas { min: 10_000, max: 10_000, negative: 20_000 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SentFinderReport {
    pub min_available: usize,
    pub max_available: usize,
    pub negative_available: usize,
    pub min_emitted: usize,
    pub max_emitted: usize,
    pub negative_emitted: usize,
}

impl fmt::Display for SentFinderReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "positives min {}/{} max {}/{}, negatives {}/{}",
            self.min_emitted,
            self.min_available,
            self.max_emitted,
            self.max_available,
            self.negative_emitted,
            self.negative_available
        )
    }
}

/// Indices of a seeded random subset of size `min(quota, n)`, in ascending
/// order.
pub fn sample_indices(n: usize, quota: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    if quota >= n {
        return idx;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    idx.shuffle(&mut rng);
    idx.truncate(quota);
    idx.sort_unstable();
    idx
}

/// Drops records whose criteria text repeats an earlier record's.
pub fn dedup_records(records: &[ClinicalRecord]) -> Vec<&ClinicalRecord> {
    let mut seen = HashSet::new();
    records.iter().filter(|r| seen.insert(r.criteria_text.as_str())).collect()
}

fn kind_seed(seed: u64, kind: AgeKind) -> u64 {
    match kind {
        AgeKind::Min => seed,
        AgeKind::Max => seed.wrapping_add(1),
    }
}

/// Sentences from record description fields, the default negative pool.
pub fn description_sentences(records: &[ClinicalRecord]) -> Vec<String> {
    records
        .iter()
        .filter_map(|r| r.description.as_deref())
        .flat_map(split_sentences)
        .collect()
}

pub fn build_sentfinder_dataset(
    records: &[&ClinicalRecord],
    negative_pool: &[String],
    quotas: Quotas,
    seed: u64,
) -> (Vec<SentenceExample>, SentFinderReport) {
    let mut out = Vec::new();
    let mut report = SentFinderReport::default();
    for kind in AgeKind::BOTH {
        let clauses: Vec<String> = records.iter().filter_map(|r| select_age_clause(r, kind)).collect();
        let quota = match kind {
            AgeKind::Min => quotas.min,
            AgeKind::Max => quotas.max,
        };
        let picked = sample_indices(clauses.len(), quota, kind_seed(seed, kind));
        match kind {
            AgeKind::Min => (report.min_available, report.min_emitted) = (clauses.len(), picked.len()),
            AgeKind::Max => (report.max_available, report.max_emitted) = (clauses.len(), picked.len()),
        }
        out.extend(picked.into_iter().map(|i| SentenceExample {
            text: clauses[i].clone(),
            label: SentenceLabel::Positive,
            kind: kind.into(),
        }));
    }

    let mut seen = HashSet::new();
    let negatives: Vec<&String> = negative_pool
        .iter()
        .filter(|s| !tokenize(s).iter().any(|t| is_age_keyword(&t.text)))
        .filter(|s| seen.insert(s.as_str()))
        .collect();
    let picked = sample_indices(negatives.len(), quotas.negative, seed.wrapping_add(2));
    report.negative_available = negatives.len();
    report.negative_emitted = picked.len();
    out.extend(picked.into_iter().map(|i| SentenceExample {
        text: negatives[i].clone(),
        label: SentenceLabel::Negative,
        kind: ExampleKind::None,
    }));
    (out, report)
}

/// A BIO-labelled token sequence for CRF training.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BioSequence {
    pub kind: AgeKind,
    pub tokens: Vec<String>,
    pub labels: Vec<BioLabel>,
    /// Externally supplied part-of-speech tags, one per token.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pos: Option<Vec<String>>,
}

impl BioSequence {
    /// Checks the label invariants: equal lengths, at least one `B`, and `I`
    /// only after `B` or `I`.
    pub fn validate(&self) -> Result<()> {
        if self.labels.len() != self.tokens.len() {
            return Err(Error::input("labels", "length differs from tokens"));
        }
        if let Some(pos) = &self.pos {
            if pos.len() != self.tokens.len() {
                return Err(Error::input("pos", "length differs from tokens"));
            }
        }
        if !self.labels.contains(&BioLabel::B) {
            return Err(Error::input("labels", "no B label"));
        }
        let mut prev = BioLabel::O;
        for &l in &self.labels {
            if l == BioLabel::I && prev == BioLabel::O {
                return Err(Error::input("labels", "I label not preceded by B or I"));
            }
            prev = l;
        }
        Ok(())
    }
}

/// Labels the first token equal to the annotated value `B` and all other
/// tokens `O`. Records without a qualifying clause are skipped.
pub fn build_bio_dataset(records: &[&ClinicalRecord], kind: AgeKind, quota: usize, seed: u64) -> Vec<BioSequence> {
    let all: Vec<BioSequence> = records
        .iter()
        .filter_map(|r| {
            let value = r.age_in_years(kind)?;
            let clause = select_age_clause(r, kind)?;
            let tokens = tokenize(&clause);
            let target = value.to_string();
            let b = tokens.iter().position(|t| t.text == target)?;
            let labels = (0..tokens.len()).map(|i| if i == b { BioLabel::B } else { BioLabel::O }).collect();
            Some(BioSequence { kind, tokens: tokens.into_iter().map(|t| t.text).collect(), labels, pos: None })
        })
        .collect();
    let picked = sample_indices(all.len(), quota, kind_seed(seed, kind));
    picked.into_iter().map(|i| all[i].clone()).collect()
}

/// Context granularity of QA training pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QaContext {
    /// The selected keyword clause.
    Clause,
    /// The full eligibility criteria text.
    Criteria,
}

impl FromStr for QaContext {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "clause" => Ok(QaContext::Clause),
            "criteria" => Ok(QaContext::Criteria),
            other => Err(Error::input("qa-context", format!("expected `clause` or `criteria`, found {other:?}"))),
        }
    }
}

/// A question context with its answer token, or with no answer when the
/// registry leaves that age unrestricted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaPair {
    pub context: String,
    pub kind: AgeKind,
    pub answer_value: Option<u32>,
    /// Byte offsets of the answer token in `context`.
    pub answer_span: Option<(usize, usize)>,
}

impl QaPair {
    pub fn is_consistent(&self) -> bool {
        match (self.answer_value, self.answer_span) {
            (Some(v), Some((s, e))) => self.context.get(s..e) == Some(v.to_string().as_str()),
            (None, None) => true,
            _ => false,
        }
    }
}

/// Answerable pairs for `kind`, and with `unanswerable` also pairs built
/// from records where `kind` is unrestricted, using the other kind's
/// context. Each group is sampled to at most `quota`.
pub fn build_qa_dataset(
    records: &[&ClinicalRecord],
    kind: AgeKind,
    quota: usize,
    seed: u64,
    context: QaContext,
    unanswerable: bool,
) -> Vec<QaPair> {
    let context_of = |r: &ClinicalRecord, k: AgeKind| match context {
        QaContext::Clause => select_age_clause(r, k),
        QaContext::Criteria => select_age_clause(r, k).map(|_| r.criteria_text.clone()),
    };
    let answerable: Vec<QaPair> = records
        .iter()
        .filter_map(|r| {
            let value = r.age_in_years(kind)?;
            let text = context_of(r, kind)?;
            let tok = value_token(&tokenize(&text), value)?.clone();
            Some(QaPair { context: text, kind, answer_value: Some(value), answer_span: Some((tok.start, tok.end)) })
        })
        .collect();
    let mut out: Vec<QaPair> =
        sample_indices(answerable.len(), quota, kind_seed(seed, kind)).into_iter().map(|i| answerable[i].clone()).collect();
    if unanswerable {
        let other = match kind {
            AgeKind::Min => AgeKind::Max,
            AgeKind::Max => AgeKind::Min,
        };
        let open: Vec<QaPair> = records
            .iter()
            .filter(|r| r.age(kind).is_none())
            .filter_map(|r| context_of(r, other))
            .map(|text| QaPair { context: text, kind, answer_value: None, answer_span: None })
            .collect();
        let seed = kind_seed(seed.wrapping_add(3), kind);
        out.extend(sample_indices(open.len(), quota, seed).into_iter().map(|i| open[i].clone()));
    }
    out
}

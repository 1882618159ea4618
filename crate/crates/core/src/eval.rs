//! Article-level recall, precision and F-score, and corpus statistics.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::age::AgeKind;
use crate::corpus::{parse_integer_token, Document};
use crate::error::{Error, Result};
use crate::pipeline::{ArticlePrediction, PredictionRecord};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldAnnotation {
    pub id: String,
    pub min: Option<u32>,
    pub max: Option<u32>,
}

impl GoldAnnotation {
    pub fn get(&self, kind: AgeKind) -> Option<u32> {
        match kind {
            AgeKind::Min => self.min,
            AgeKind::Max => self.max,
        }
    }
}

/// Reads `doc_id,min_age,max_age` rows; an empty cell means unannotated.
pub fn read_gold_csv<R: std::io::Read>(input: R) -> Result<Vec<GoldAnnotation>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = reader.headers().map_err(|e| Error::input("gold", e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["doc_id", "min_age", "max_age"] {
        return Err(Error::input("gold", format!("expected header doc_id,min_age,max_age, found {}", headers.iter().collect::<Vec<_>>().join(","))));
    }
    let mut out = Vec::new();
    for (n, row) in reader.records().enumerate() {
        let row = row.map_err(|e| Error::input("gold", e.to_string()))?;
        let line = n + 2;
        let cell = |i: usize, name: &str| -> Result<Option<u32>> {
            match &row[i] {
                "" => Ok(None),
                v => match v.parse::<u32>() {
                    Ok(x) if x > 0 => Ok(Some(x)),
                    _ => Err(Error::input(format!("gold line {line} {name}"), format!("expected a positive integer, found {v:?}"))),
                },
            }
        };
        out.push(GoldAnnotation { id: row[0].to_string(), min: cell(1, "min_age")?, max: cell(2, "max_age")? });
    }
    Ok(out)
}

pub fn write_gold_csv<W: std::io::Write>(out: W, golds: &[GoldAnnotation]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let cell = |v: Option<u32>| v.map(|v| v.to_string()).unwrap_or_default();
    let err = |e: csv::Error| Error::input("gold", e.to_string());
    w.write_record(["doc_id", "min_age", "max_age"]).map_err(err)?;
    for g in golds {
        w.write_record([g.id.clone(), cell(g.min), cell(g.max)]).map_err(err)?;
    }
    w.flush()?;
    Ok(())
}

/// The predicted values of one article, as scored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredictedAges {
    pub id: String,
    pub min: Option<u32>,
    pub max: Option<u32>,
}

impl PredictedAges {
    pub fn get(&self, kind: AgeKind) -> Option<u32> {
        match kind {
            AgeKind::Min => self.min,
            AgeKind::Max => self.max,
        }
    }
}

impl From<&ArticlePrediction> for PredictedAges {
    fn from(p: &ArticlePrediction) -> Self {
        PredictedAges { id: p.id.clone(), min: p.min.as_ref().map(|a| a.value), max: p.max.as_ref().map(|a| a.value) }
    }
}

impl From<&PredictionRecord> for PredictedAges {
    fn from(p: &PredictionRecord) -> Self {
        PredictedAges { id: p.id.clone(), min: p.min.as_ref().map(|a| a.value), max: p.max.as_ref().map(|a| a.value) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KindMetrics {
    pub correct: usize,
    pub predicted: usize,
    pub annotated: usize,
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
    /// Set when `annotated` is zero and recall is reported as 0.
    pub recall_undefined: bool,
    /// Set when `predicted` is zero and precision is reported as 0.
    pub precision_undefined: bool,
}

impl KindMetrics {
    pub fn from_counts(correct: usize, predicted: usize, annotated: usize) -> KindMetrics {
        let ratio = |n: usize, d: usize| if d == 0 { 0.0 } else { n as f64 / d as f64 };
        let recall = ratio(correct, annotated);
        let precision = ratio(correct, predicted);
        let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
        KindMetrics {
            correct,
            predicted,
            annotated,
            recall,
            precision,
            f1,
            recall_undefined: annotated == 0,
            precision_undefined: predicted == 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub min: KindMetrics,
    pub max: KindMetrics,
}

impl Metrics {
    pub fn get(&self, kind: AgeKind) -> &KindMetrics {
        match kind {
            AgeKind::Min => &self.min,
            AgeKind::Max => &self.max,
        }
    }
}

impl fmt::Display for Metrics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<8}{:>9}{:>11}{:>11}{:>9}{:>11}{:>10}", "kind", "correct", "predicted", "annotated", "recall", "precision", "f-score")?;
        for kind in AgeKind::BOTH {
            let m = self.get(kind);
            let pct = |v: f64, undefined: bool| format!("{:.1}{}", 100.0 * v, if undefined { "*" } else { "" });
            writeln!(
                f,
                "{:<8}{:>9}{:>11}{:>11}{:>9}{:>11}{:>10}",
                kind.as_str(),
                m.correct,
                m.predicted,
                m.annotated,
                pct(m.recall, m.recall_undefined),
                pct(m.precision, m.precision_undefined),
                pct(m.f1, false),
            )?;
        }
        if AgeKind::BOTH.iter().any(|&k| self.get(k).recall_undefined || self.get(k).precision_undefined) {
            writeln!(f, "* zero denominator, reported as 0")?;
        }
        Ok(())
    }
}

/// Scores predictions against gold annotations, one article at a time.
/// Every prediction must name an annotated document; documents without a
/// prediction count as Null.
pub fn score_corpus(preds: &[PredictedAges], golds: &[GoldAnnotation]) -> Result<Metrics> {
    let mut gold_by_id = BTreeMap::new();
    for g in golds {
        if gold_by_id.insert(g.id.as_str(), g).is_some() {
            return Err(Error::Evaluation(format!("duplicate gold document id {:?}", g.id)));
        }
    }
    let mut seen = BTreeSet::new();
    for p in preds {
        if !seen.insert(p.id.as_str()) {
            return Err(Error::Evaluation(format!("duplicate predicted document id {:?}", p.id)));
        }
        if !gold_by_id.contains_key(p.id.as_str()) {
            return Err(Error::Evaluation(format!("prediction for unknown document id {:?}", p.id)));
        }
    }
    let score = |kind: AgeKind| {
        let annotated = golds.iter().filter(|g| g.get(kind).is_some()).count();
        let predicted = preds.iter().filter(|p| p.get(kind).is_some()).count();
        let correct = preds
            .iter()
            .filter(|p| p.get(kind).is_some() && p.get(kind) == gold_by_id[p.id.as_str()].get(kind))
            .count();
        KindMetrics::from_counts(correct, predicted, annotated)
    };
    Ok(Metrics { min: score(AgeKind::Min), max: score(AgeKind::Max) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CorpusStats {
    pub articles: usize,
    pub sentences: usize,
    pub tokens: usize,
    pub keyword_sentences: usize,
    pub numeric_tokens_in_keyword_sentences: usize,
}

pub fn corpus_stats(docs: &[Document]) -> CorpusStats {
    let mut st = CorpusStats { articles: docs.len(), ..Default::default() };
    for s in docs.iter().flat_map(Document::sentences) {
        st.sentences += 1;
        st.tokens += s.tokens.len();
        if s.has_age_keyword() {
            st.keyword_sentences += 1;
            st.numeric_tokens_in_keyword_sentences += s.tokens.iter().filter(|t| parse_integer_token(t).is_some()).count();
        }
    }
    st
}

impl fmt::Display for CorpusStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "articles                         {}", self.articles)?;
        writeln!(f, "sentences                        {}", self.sentences)?;
        writeln!(f, "tokens                           {}", self.tokens)?;
        writeln!(f, "keyword sentences                {}", self.keyword_sentences)?;
        writeln!(f, "numeric tokens in keyword sents  {}", self.numeric_tokens_in_keyword_sentences)
    }
}

//! Span-answer component for the questions "what is the min/max age of the
//! participants?".
//!
//! Every integer token of a sentence is a candidate answer. A per-question
//! logistic scorer over candidate context features assigns each candidate a
//! probability of being the answer; the best candidate is returned with that
//! probability as its confidence. Any other implementation of
//! [`AgeAnswerer`] can be substituted in the pipeline.

use std::io::{BufRead, Write};

use crate::age::{AgeAnswer, AgeKind};
use crate::corpus::{is_age_keyword, is_comparison, is_dash, parse_integer_token, tokenize, Sentence, Token};
use crate::error::{Error, Result};
use crate::linear::{FeatureVector, LinearModel, LogisticObjective, TrainConfig, Vocabulary};
use crate::modelfile::{write_header, LineReader};
use crate::supervision::QaPair;

/// Anything that answers a min/max age question about one sentence.
pub trait AgeAnswerer: Sync {
    /// The answer must be one of the sentence's integer tokens, with a
    /// confidence in `[0, 1]`.
    fn answer(&self, s: &Sentence, kind: AgeKind) -> Option<AgeAnswer>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Candidate {
    pub token_index: usize,
    pub value: u32,
}

pub fn enumerate_candidates(tokens: &[Token]) -> Vec<Candidate> {
    tokens
        .iter()
        .enumerate()
        .filter_map(|(i, t)| parse_integer_token(t).map(|value| Candidate { token_index: i, value }))
        .collect()
}

const WINDOW: isize = 3;
const NGRAM_NEIGHBOURS: isize = 2;
const BAG: isize = 6;

fn magnitude_bucket(v: u32) -> &'static str {
    match v {
        0..=9 => "0-9",
        10..=17 => "10-17",
        18..=29 => "18-29",
        30..=49 => "30-49",
        50..=64 => "50-64",
        65..=99 => "65-99",
        _ => "100+",
    }
}

fn distance_bucket(d: usize) -> &'static str {
    match d {
        0 | 1 => "1",
        2 => "2",
        3 => "3",
        4 | 5 => "4-5",
        6..=10 => "6-10",
        _ => "11+",
    }
}

fn adjacent(a: &Token, b: &Token) -> bool {
    a.end == b.start
}

/// Context features of the candidate at `c.token_index`, each conjoined with
/// the question kind as a `min|` or `max|` prefix.
pub fn featurize_candidate(c: &Candidate, tokens: &[Token], kind: AgeKind) -> FeatureVector {
    let i = c.token_index;
    let n = tokens.len() as isize;
    let get = |off: isize| -> Option<&Token> {
        let j = i as isize + off;
        (0..n).contains(&j).then(|| &tokens[j as usize])
    };
    let mut raw: Vec<String> = vec!["bias".into()];

    let word = |off: isize| get(off).map_or_else(|| if off < 0 { "<BOS>".to_string() } else { "<EOS>".to_string() }, Token::norm);
    for off in (-WINDOW..=WINDOW).filter(|&o| o != 0) {
        raw.push(format!("w{off:+}:{}", word(off)));
    }
    for off in 1..=BAG {
        if let Some(t) = get(-off) {
            raw.push(format!("bagL:{}", t.norm()));
        }
        if let Some(t) = get(off) {
            raw.push(format!("bagR:{}", t.norm()));
        }
    }
    raw.push(format!("w-1|w+1:{}|{}", word(-1), word(1)));
    raw.push(format!("w-2|w-1:{}|{}", word(-2), word(-1)));
    raw.push(format!("w+1|w+2:{}|{}", word(1), word(2)));
    for off in (-NGRAM_NEIGHBOURS..=NGRAM_NEIGHBOURS).filter(|&o| o != 0) {
        if let Some(t) = get(off) {
            let side = if off < 0 { "L" } else { "R" };
            let chars: Vec<char> = t.norm().chars().collect();
            for n in 2..=4 {
                for g in chars.windows(n) {
                    raw.push(format!("{side}:c{n}:{}", g.iter().collect::<String>()));
                }
            }
        }
    }

    let is_int = |t: Option<&Token>| t.is_some_and(|t| parse_integer_token(t).is_some());
    let is_dash_tok = |t: Option<&Token>| t.is_some_and(|t| t.text.chars().count() == 1 && t.text.chars().all(is_dash));
    if is_dash_tok(get(1)) && is_int(get(2)) {
        raw.push("rangeLeft".into());
    }
    if is_dash_tok(get(-1)) && is_int(get(-2)) {
        raw.push("rangeRight".into());
    }
    if let Some(t) = get(-1).filter(|t| is_comparison(&t.text)) {
        raw.push(format!("cmpLeft:{}", t.norm()));
    }
    if let Some(t) = get(1).filter(|t| is_comparison(&t.text)) {
        raw.push(format!("cmpRight:{}", t.norm()));
    }

    let me = &tokens[i];
    let decimal_after = matches!((get(1), get(2)), (Some(p), Some(d)) if p.text == "." && adjacent(me, p) && adjacent(p, d) && is_int(Some(d)));
    let decimal_before = matches!((get(-2), get(-1)), (Some(d), Some(p)) if p.text == "." && adjacent(p, me) && adjacent(d, p) && is_int(Some(d)));
    if decimal_after || decimal_before {
        raw.push("decimal".into());
    }

    let nearest = tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| is_age_keyword(&t.text))
        .map(|(j, _)| (j.abs_diff(i), j < i))
        .min();
    match nearest {
        Some((d, left)) => {
            raw.push(format!("kwdist:{}", distance_bucket(d)));
            raw.push(format!("kwdir:{}", if left { "left" } else { "right" }));
        }
        None => raw.push("kwdist:none".into()),
    }

    raw.push(format!("mag:{}", magnitude_bucket(c.value)));
    let ints: Vec<usize> = enumerate_candidates(tokens).iter().map(|c| c.token_index).collect();
    if ints.first() == Some(&i) {
        raw.push("candFirst".into());
    }
    if ints.last() == Some(&i) {
        raw.push("candLast".into());
    }

    let mut fv = FeatureVector::new();
    for f in raw {
        fv.add(format!("{kind}|{f}"), 1.0);
    }
    fv
}

#[derive(Debug, Clone, PartialEq)]
pub struct QaModel {
    pub min: LinearModel,
    pub max: LinearModel,
}

/// Candidate-level binary examples for one question kind.
pub fn training_examples(pairs: &[QaPair], kind: AgeKind) -> Vec<(FeatureVector, bool)> {
    pairs
        .iter()
        .filter(|p| p.kind == kind)
        .flat_map(|p| {
            let tokens = tokenize(&p.context);
            enumerate_candidates(&tokens)
                .into_iter()
                .map(|c| {
                    let t = &tokens[c.token_index];
                    (featurize_candidate(&c, &tokens, kind), Some((t.start, t.end)) == p.answer_span)
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

pub fn objective(pairs: &[QaPair], kind: AgeKind, l2: f64) -> LogisticObjective {
    let data = training_examples(pairs, kind);
    let vocab = Vocabulary::build(data.iter().map(|(f, _)| f));
    LogisticObjective::new(&vocab, &data, l2)
}

impl QaModel {
    pub fn train(pairs: &[QaPair], config: TrainConfig) -> Result<QaModel> {
        let train_kind = |kind: AgeKind| -> Result<LinearModel> {
            let data = training_examples(pairs, kind);
            if !data.iter().any(|(_, y)| *y) {
                return Err(Error::Training(format!("no positive {kind} candidates in QA training pairs")));
            }
            Ok(LinearModel::train(&data, config)?.0)
        };
        Ok(QaModel { min: train_kind(AgeKind::Min)?, max: train_kind(AgeKind::Max)? })
    }

    pub fn scorer(&self, kind: AgeKind) -> &LinearModel {
        match kind {
            AgeKind::Min => &self.min,
            AgeKind::Max => &self.max,
        }
    }

    /// Probability of each candidate in `tokens` being the answer.
    pub fn score_candidates(&self, tokens: &[Token], kind: AgeKind) -> Vec<(Candidate, f64)> {
        enumerate_candidates(tokens)
            .into_iter()
            .map(|c| {
                let p = self.scorer(kind).probability(&featurize_candidate(&c, tokens, kind));
                (c, p)
            })
            .collect()
    }

    pub fn write<W: Write>(&self, out: &mut W) -> Result<()> {
        write_header(out, "qa")?;
        for kind in AgeKind::BOTH {
            writeln!(out, "block {kind}")?;
            self.scorer(kind).write_block(out)?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(input: R) -> Result<QaModel> {
        let mut r = LineReader::new(input);
        r.expect_header("qa")?;
        let mut read_kind = |kind: AgeKind| -> Result<LinearModel> {
            let block = r.expect_key("block")?;
            if block != kind.as_str() {
                return Err(r.error(format!("expected block {kind}, found {block}")));
            }
            LinearModel::read_block(&mut r)
        };
        let min = read_kind(AgeKind::Min)?;
        let max = read_kind(AgeKind::Max)?;
        Ok(QaModel { min, max })
    }
}

impl AgeAnswerer for QaModel {
    fn answer(&self, s: &Sentence, kind: AgeKind) -> Option<AgeAnswer> {
        let mut best: Option<(Candidate, f64)> = None;
        for (c, p) in self.score_candidates(&s.tokens, kind) {
            if best.is_none_or(|(_, bp)| p > bp) {
                best = Some((c, p));
            }
        }
        best.map(|(c, p)| {
            let t = &s.tokens[c.token_index];
            AgeAnswer { value: c.value, confidence: p, kind, sentence_index: s.index, span: (t.start, t.end) }
        })
    }
}

//! Maximum-entropy classifier for sentences that state a minimum or maximum
//! participant age.

use std::io::{BufRead, Write};

use crate::corpus::{tokenize, Sentence};
use crate::error::Result;
use crate::linear::{FeatureVector, LinearModel, LogisticObjective, TrainConfig, Vocabulary};
use crate::modelfile::{write_header, LineReader};
use crate::optim::OptimTrace;
use crate::supervision::{SentenceExample, SentenceLabel};

pub const MAX_WORD_NGRAM: usize = 4;
pub const LETTER_NGRAMS: std::ops::RangeInclusive<usize> = 2..=4;

/// Word n-grams (n = 1..4) over lowercased tokens and letter n-grams
/// (n = 2..4) within each token, counted.
pub fn featurize_tokens(words: &[String]) -> FeatureVector {
    let mut fv = FeatureVector::new();
    for n in 1..=MAX_WORD_NGRAM {
        for gram in words.windows(n) {
            fv.add(format!("w{n}:{}", gram.join("_")), 1.0);
        }
    }
    for word in words {
        let chars: Vec<char> = word.chars().collect();
        for n in LETTER_NGRAMS {
            for gram in chars.windows(n) {
                fv.add(format!("c{n}:{}", gram.iter().collect::<String>()), 1.0);
            }
        }
    }
    fv
}

pub fn featurize_sentence(s: &Sentence) -> FeatureVector {
    let words: Vec<String> = s.tokens.iter().map(|t| t.norm()).collect();
    featurize_tokens(&words)
}

pub fn featurize_text(text: &str) -> FeatureVector {
    let words: Vec<String> = tokenize(text).iter().map(|t| t.norm()).collect();
    featurize_tokens(&words)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxEntModel {
    pub inner: LinearModel,
}

impl MaxEntModel {
    pub fn train(examples: &[SentenceExample], config: TrainConfig) -> Result<(MaxEntModel, OptimTrace)> {
        let data = training_data(examples);
        let (inner, trace) = LinearModel::train(&data, config)?;
        Ok((MaxEntModel { inner }, trace))
    }

    /// Probability of the positive label and whether it reaches 0.5.
    pub fn classify(&self, s: &Sentence) -> (SentenceLabel, f64) {
        self.classify_features(&featurize_sentence(s))
    }

    pub fn classify_features(&self, fv: &FeatureVector) -> (SentenceLabel, f64) {
        let p = self.inner.probability(fv);
        let label = if p >= 0.5 { SentenceLabel::Positive } else { SentenceLabel::Negative };
        (label, p)
    }

    pub fn write<W: Write>(&self, out: &mut W) -> Result<()> {
        write_header(out, "maxent")?;
        self.inner.write_block(out)
    }

    pub fn read<R: BufRead>(input: R) -> Result<MaxEntModel> {
        let mut r = LineReader::new(input);
        r.expect_header("maxent")?;
        Ok(MaxEntModel { inner: LinearModel::read_block(&mut r)? })
    }
}

pub fn training_data(examples: &[SentenceExample]) -> Vec<(FeatureVector, bool)> {
    examples
        .iter()
        .map(|e| (featurize_text(&e.text), e.label == SentenceLabel::Positive))
        .collect()
}

/// The training objective over `examples`, with its vocabulary, for
/// gradient checks and objective comparisons.
pub fn objective(examples: &[SentenceExample], l2: f64) -> (LogisticObjective, Vocabulary) {
    let data = training_data(examples);
    let vocab = Vocabulary::build(data.iter().map(|(f, _)| f));
    (LogisticObjective::new(&vocab, &data, l2), vocab)
}

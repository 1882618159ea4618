//! Linear-chain CRF over BIO labels for token-level age extraction.

mod features;
mod inference;

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use features::featurize_sequence;
pub use inference::{log_sum_exp, sequence_score, viterbi, Emissions, Lattice, Transitions};

use crate::age::{AgeAnswer, AgeKind};
use crate::corpus::{parse_integer_token, Document};
use crate::error::{Error, Result};
use crate::linear::{FeatureVector, Vocabulary};
use crate::modelfile::{write_header, LineReader};
use crate::optim::{minimize, Objective, OptimConfig, OptimTrace};
use crate::supervision::BioSequence;

pub const NUM_LABELS: usize = 3;

/// Label set in tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BioLabel {
    B,
    I,
    O,
}

impl BioLabel {
    pub const ALL: [BioLabel; NUM_LABELS] = [BioLabel::B, BioLabel::I, BioLabel::O];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> BioLabel {
        BioLabel::ALL[i]
    }
}

impl fmt::Display for BioLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for BioLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "B" => Ok(BioLabel::B),
            "I" => Ok(BioLabel::I),
            "O" => Ok(BioLabel::O),
            other => Err(Error::input("label", format!("unknown BIO label {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrfConfig {
    pub l2: f64,
    pub max_epochs: usize,
    pub grad_tol: f64,
    pub seed: u64,
}

impl Default for CrfConfig {
    fn default() -> Self {
        CrfConfig { l2: 1.0, max_epochs: 200, grad_tol: 1e-3, seed: 42 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrfModel {
    pub kind: AgeKind,
    pub vocab: Vocabulary,
    /// Per-feature state weights indexed by label.
    pub state: Vec<[f64; NUM_LABELS]>,
    /// `transitions[prev][cur]`.
    pub transitions: Transitions,
    pub config: CrfConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaggedSequence {
    pub tokens: Vec<String>,
    pub labels: Vec<BioLabel>,
    /// Marginal probability of each predicted label.
    pub marginals: Vec<f64>,
}

impl CrfModel {
    pub fn zero(kind: AgeKind, vocab: Vocabulary, config: CrfConfig) -> CrfModel {
        let n = vocab.len();
        CrfModel { kind, vocab, state: vec![[0.0; NUM_LABELS]; n], transitions: [[0.0; NUM_LABELS]; NUM_LABELS], config }
    }

    pub fn emissions(&self, features: &[FeatureVector]) -> Vec<[f64; NUM_LABELS]> {
        features
            .iter()
            .map(|fv| {
                let mut e = [0.0; NUM_LABELS];
                for (name, v) in fv.iter() {
                    if let Some(id) = self.vocab.id(name) {
                        for (y, w) in self.state[id as usize].iter().enumerate() {
                            e[y] += w * v;
                        }
                    }
                }
                e
            })
            .collect()
    }

    pub fn viterbi_decode<S: AsRef<str>>(&self, tokens: &[S], pos: Option<&[String]>) -> Vec<BioLabel> {
        let emit = self.emissions(&featurize_sequence(tokens, pos));
        viterbi(&emit, &self.transitions).into_iter().map(BioLabel::from_index).collect()
    }

    /// Per-position label distributions, indexed by `BioLabel::index`.
    pub fn token_marginals<S: AsRef<str>>(&self, tokens: &[S], pos: Option<&[String]>) -> Vec<[f64; NUM_LABELS]> {
        let emit = self.emissions(&featurize_sequence(tokens, pos));
        Lattice::compute(&emit, &self.transitions).marginals()
    }

    pub fn tag<S: AsRef<str>>(&self, tokens: &[S], pos: Option<&[String]>) -> TaggedSequence {
        let emit = self.emissions(&featurize_sequence(tokens, pos));
        let path = viterbi(&emit, &self.transitions);
        let marg = Lattice::compute(&emit, &self.transitions).marginals();
        TaggedSequence {
            tokens: tokens.iter().map(|t| t.as_ref().to_string()).collect(),
            labels: path.iter().map(|&y| BioLabel::from_index(y)).collect(),
            marginals: path.iter().zip(&marg).map(|(&y, m)| m[y]).collect(),
        }
    }

    fn params(&self) -> Vec<f64> {
        self.transitions
            .iter()
            .flatten()
            .chain(self.state.iter().flatten())
            .copied()
            .collect()
    }

    fn set_params(&mut self, x: &[f64]) {
        for (i, row) in self.transitions.iter_mut().enumerate() {
            row.copy_from_slice(&x[i * NUM_LABELS..(i + 1) * NUM_LABELS]);
        }
        let off = NUM_LABELS * NUM_LABELS;
        for (f, row) in self.state.iter_mut().enumerate() {
            row.copy_from_slice(&x[off + f * NUM_LABELS..off + (f + 1) * NUM_LABELS]);
        }
    }

    /// Trains by maximising the L2-regularised conditional log-likelihood.
    pub fn train(sequences: &[BioSequence], config: CrfConfig) -> Result<(CrfModel, OptimTrace)> {
        let Some(first) = sequences.first() else {
            return Err(Error::Training("empty CRF training set".into()));
        };
        let kind = first.kind;
        for (i, s) in sequences.iter().enumerate() {
            s.validate().map_err(|e| Error::Training(format!("sequence {i}: {e}")))?;
            if s.kind != kind {
                return Err(Error::Training(format!("sequence {i} has kind {} but expected {kind}", s.kind)));
            }
        }
        let objective = CrfObjective::new(sequences, config.l2);
        let mut model = CrfModel::zero(kind, objective.vocab.clone(), config);
        let (x, trace) = minimize(
            &objective,
            model.params(),
            OptimConfig { max_epochs: config.max_epochs, grad_tol: config.grad_tol },
        );
        log::debug!("crf training: {} epochs, grad norm {:.3e}", trace.epochs, trace.grad_norm);
        model.set_params(&x);
        Ok((model, trace))
    }

    pub fn write<W: Write>(&self, out: &mut W) -> Result<()> {
        write_header(out, "crf")?;
        writeln!(out, "kind {}", self.kind)?;
        let families = self
            .vocab
            .family_counts()
            .into_iter()
            .map(|(f, c)| format!("{f}={c}"))
            .collect::<Vec<_>>()
            .join(" ");
        writeln!(out, "families {families}")?;
        writeln!(out, "l2 {}", self.config.l2)?;
        writeln!(out, "max_epochs {}", self.config.max_epochs)?;
        writeln!(out, "grad_tol {}", self.config.grad_tol)?;
        writeln!(out, "seed {}", self.config.seed)?;
        writeln!(out, "transitions")?;
        for (label, row) in BioLabel::ALL.iter().zip(&self.transitions) {
            writeln!(out, "{label}\t{}\t{}\t{}", row[0], row[1], row[2])?;
        }
        writeln!(out, "features {}", self.vocab.len())?;
        for (id, (name, w)) in self.vocab.names().iter().zip(&self.state).enumerate() {
            writeln!(out, "{id}\t{name}\t{}\t{}\t{}", w[0], w[1], w[2])?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(input: R) -> Result<CrfModel> {
        let mut r = LineReader::new(input);
        r.expect_header("crf")?;
        let kind: AgeKind = r.expect_key("kind")?.parse().map_err(|_| r.error("bad kind"))?;
        r.expect_key("families")?;
        let l2 = r.parse_key("l2")?;
        let max_epochs = r.parse_key("max_epochs")?;
        let grad_tol = r.parse_key("grad_tol")?;
        let seed = r.parse_key("seed")?;
        r.expect_key("transitions")?;
        let mut transitions = [[0.0; NUM_LABELS]; NUM_LABELS];
        for (label, row) in BioLabel::ALL.iter().zip(transitions.iter_mut()) {
            let fields = r.fields(1 + NUM_LABELS)?;
            if fields[0] != label.to_string() {
                return Err(r.error(format!("expected transition row {label}")));
            }
            for y in 0..NUM_LABELS {
                row[y] = r.parse_field(&fields[y + 1])?;
            }
        }
        let n: usize = r.parse_key("features")?;
        let mut names = Vec::with_capacity(n);
        let mut state = Vec::with_capacity(n);
        for expected in 0..n {
            let fields = r.fields(2 + NUM_LABELS)?;
            let id: usize = r.parse_field(&fields[0])?;
            if id != expected {
                return Err(r.error(format!("expected feature id {expected}, found {id}")));
            }
            names.push(fields[1].clone());
            let mut w = [0.0; NUM_LABELS];
            for y in 0..NUM_LABELS {
                w[y] = r.parse_field(&fields[y + 2])?;
            }
            state.push(w);
        }
        let vocab = Vocabulary::from_names(names.iter().cloned());
        if vocab.names() != names.as_slice() {
            return Err(r.error("feature names must be unique and sorted"));
        }
        Ok(CrfModel { kind, vocab, state, transitions, config: CrfConfig { l2, max_epochs, grad_tol, seed } })
    }
}

/// Regularised negative conditional log-likelihood. Parameters are the nine
/// transition weights (row-major `prev * 3 + cur`) followed by the state
/// weights (`9 + feature * 3 + label`).
pub struct CrfObjective {
    pub vocab: Vocabulary,
    sequences: Vec<(Vec<Vec<(u32, f64)>>, Vec<usize>)>,
    l2: f64,
}

impl CrfObjective {
    pub fn new(sequences: &[BioSequence], l2: f64) -> CrfObjective {
        let feats: Vec<Vec<FeatureVector>> =
            sequences.iter().map(|s| featurize_sequence(&s.tokens, s.pos.as_deref())).collect();
        let vocab = Vocabulary::build(feats.iter().flatten());
        let sequences = feats
            .iter()
            .zip(sequences)
            .map(|(fs, s)| {
                (
                    fs.iter().map(|fv| vocab.index_vector(fv)).collect(),
                    s.labels.iter().map(|l| l.index()).collect(),
                )
            })
            .collect();
        CrfObjective { vocab, sequences, l2 }
    }
}

const T_LEN: usize = NUM_LABELS * NUM_LABELS;

impl Objective for CrfObjective {
    fn dim(&self) -> usize {
        T_LEN + self.vocab.len() * NUM_LABELS
    }

    fn evaluate(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let mut f = 0.0;
        for (g, w) in grad.iter_mut().zip(x) {
            f += 0.5 * self.l2 * w * w;
            *g = self.l2 * w;
        }
        let trans: Transitions = std::array::from_fn(|a| std::array::from_fn(|b| x[a * NUM_LABELS + b]));
        for (feats, gold) in &self.sequences {
            let emit: Vec<[f64; NUM_LABELS]> = feats
                .iter()
                .map(|fs| {
                    let mut e = [0.0; NUM_LABELS];
                    for &(id, v) in fs {
                        let base = T_LEN + id as usize * NUM_LABELS;
                        for (y, ey) in e.iter_mut().enumerate() {
                            *ey += x[base + y] * v;
                        }
                    }
                    e
                })
                .collect();
            let lat = Lattice::compute(&emit, &trans);
            f += lat.log_z - sequence_score(&emit, &trans, gold);
            let marg = lat.marginals();
            for (i, fs) in feats.iter().enumerate() {
                for &(id, v) in fs {
                    let base = T_LEN + id as usize * NUM_LABELS;
                    for y in 0..NUM_LABELS {
                        grad[base + y] += v * marg[i][y];
                    }
                    grad[base + gold[i]] -= v;
                }
                if i > 0 {
                    for a in 0..NUM_LABELS {
                        for b in 0..NUM_LABELS {
                            grad[a * NUM_LABELS + b] += lat.pair_marginal(&emit, &trans, i, a, b);
                        }
                    }
                    grad[gold[i - 1] * NUM_LABELS + gold[i]] -= 1.0;
                }
            }
        }
        f
    }
}

/// Scans every sentence containing an age keyword, tags it, and returns the
/// integer token labelled `B` with the highest `B` marginal (earliest wins
/// ties). Sections are not restricted.
pub fn extract_age_crf(model: &CrfModel, doc: &Document) -> Option<AgeAnswer> {
    let mut best: Option<AgeAnswer> = None;
    for sentence in doc.sentences().filter(|s| s.has_age_keyword()) {
        let words: Vec<&str> = sentence.tokens.iter().map(|t| t.text.as_str()).collect();
        let labels = model.viterbi_decode(&words, None);
        let marg = model.token_marginals(&words, None);
        for (i, tok) in sentence.tokens.iter().enumerate() {
            if labels[i] != BioLabel::B {
                continue;
            }
            let Some(value) = parse_integer_token(tok) else { continue };
            let confidence = marg[i][BioLabel::B.index()];
            if best.as_ref().is_none_or(|b| confidence > b.confidence) {
                best = Some(AgeAnswer {
                    value,
                    confidence,
                    kind: model.kind,
                    sentence_index: sentence.index,
                    span: (tok.start, tok.end),
                });
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::finite_difference;

    fn seq(tokens: &[&str], b: usize) -> BioSequence {
        BioSequence {
            kind: AgeKind::Min,
            tokens: tokens.iter().map(|s| s.to_string()).collect(),
            labels: (0..tokens.len()).map(|i| if i == b { BioLabel::B } else { BioLabel::O }).collect(),
            pos: None,
        }
    }

    #[test]
    fn empty_training_set_is_error() {
        assert!(matches!(CrfModel::train(&[], CrfConfig::default()), Err(Error::Training(_))));
    }

    #[test]
    fn invalid_sequence_is_error() {
        let mut s = seq(&["aged", "18"], 1);
        s.labels = vec![BioLabel::I, BioLabel::O];
        assert!(CrfModel::train(&[s], CrfConfig::default()).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let data = vec![seq(&["aged", "18", "-", "24", "years"], 1), seq(&["at", "least", "21", "years"], 2)];
        let obj = CrfObjective::new(&data, 0.5);
        let x: Vec<f64> = (0..obj.dim()).map(|i| ((i * 37 % 17) as f64 - 8.0) / 10.0).collect();
        let mut g = vec![0.0; obj.dim()];
        obj.evaluate(&x, &mut g);
        for coord in [0, 4, 8, 9, 20, obj.dim() - 1] {
            let fd = finite_difference(&obj, &x, coord, 1e-5);
            let rel = (fd - g[coord]).abs() / g[coord].abs().max(fd.abs()).max(1e-8);
            assert!(rel < 1e-4, "coord {coord}: fd {fd} analytic {}", g[coord]);
        }
    }

    #[test]
    fn model_file_roundtrip() {
        let data = vec![seq(&["aged", "18", "years"], 1)];
        let (model, _) = CrfModel::train(&data, CrfConfig { max_epochs: 5, ..Default::default() }).unwrap();
        let mut buf = Vec::new();
        model.write(&mut buf).unwrap();
        let back = CrfModel::read(buf.as_slice()).unwrap();
        assert_eq!(back, model);
    }

    #[test]
    fn zero_model_marginals_uniform() {
        let m = CrfModel::zero(AgeKind::Min, Vocabulary::default(), CrfConfig::default());
        for row in m.token_marginals(&["a", "b"], None) {
            assert!(row.iter().all(|p| (p - 1.0 / 3.0).abs() < 1e-12));
        }
        assert_eq!(m.viterbi_decode(&["a", "b"], None), [BioLabel::B, BioLabel::B]);
    }
}

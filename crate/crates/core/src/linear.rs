//! Sparse binary logistic regression (maximum entropy) shared by the
//! sentence classifier and the QA candidate scorers.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modelfile::LineReader;
use crate::optim::{minimize, Objective, OptimConfig, OptimTrace};

/// Sparse feature map from feature name to value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(BTreeMap<String, f64>);

impl FeatureVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, feature: impl Into<String>, value: f64) {
        *self.0.entry(feature.into()).or_insert(0.0) += value;
    }

    pub fn get(&self, feature: &str) -> Option<f64> {
        self.0.get(feature).copied()
    }

    pub fn contains(&self, feature: &str) -> bool {
        self.0.contains_key(feature)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn scaled(&self, factor: f64) -> FeatureVector {
        FeatureVector(self.0.iter().map(|(k, v)| (k.clone(), v * factor)).collect())
    }
}

impl FromIterator<(String, f64)> for FeatureVector {
    fn from_iter<I: IntoIterator<Item = (String, f64)>>(iter: I) -> Self {
        let mut fv = FeatureVector::new();
        for (k, v) in iter {
            fv.add(k, v);
        }
        fv
    }
}

/// Feature-id table. Ids are assigned in lexicographic order of feature
/// name so that identical training data always yields identical ids.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Vocabulary {
    names: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    pub fn from_names(names: impl IntoIterator<Item = String>) -> Vocabulary {
        let sorted: BTreeSet<String> = names.into_iter().collect();
        let names: Vec<String> = sorted.into_iter().collect();
        let index = names.iter().enumerate().map(|(i, n)| (n.clone(), i as u32)).collect();
        Vocabulary { names, index }
    }

    pub fn build<'a>(vectors: impl IntoIterator<Item = &'a FeatureVector>) -> Vocabulary {
        Vocabulary::from_names(vectors.into_iter().flat_map(|fv| fv.0.keys().cloned()))
    }

    pub fn id(&self, name: &str) -> Option<u32> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: u32) -> &str {
        &self.names[id as usize]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Sparse `(id, value)` pairs for the known features of `fv`, sorted by id.
    pub fn index_vector(&self, fv: &FeatureVector) -> Vec<(u32, f64)> {
        let mut out: Vec<(u32, f64)> = fv.iter().filter_map(|(k, v)| self.id(k).map(|id| (id, v))).collect();
        out.sort_by_key(|&(id, _)| id);
        out
    }

    /// Count of features per family, where the family is the text before the
    /// first `:` of the feature name.
    pub fn family_counts(&self) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for n in &self.names {
            let fam = n.split_once(':').map_or(n.as_str(), |(f, _)| f);
            *counts.entry(fam.to_string()).or_insert(0) += 1;
        }
        counts
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// L2 regularisation strength on the weights (the bias is unregularised).
    pub l2: f64,
    pub max_epochs: usize,
    pub grad_tol: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { l2: 1.0, max_epochs: 500, grad_tol: 1e-4, seed: 42 }
    }
}

pub struct SparseExample {
    pub features: Vec<(u32, f64)>,
    pub positive: bool,
}

/// L2-regularised negative log-likelihood of a binary logistic model.
/// Parameters are laid out as `[bias, w_0, .., w_{n-1}]`.
pub struct LogisticObjective {
    pub examples: Vec<SparseExample>,
    pub num_features: usize,
    pub l2: f64,
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl Objective for LogisticObjective {
    fn dim(&self) -> usize {
        self.num_features + 1
    }

    fn evaluate(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let (bias, w) = (x[0], &x[1..]);
        let mut f = 0.0;
        grad[0] = 0.0;
        for i in 0..self.num_features {
            f += 0.5 * self.l2 * w[i] * w[i];
            grad[i + 1] = self.l2 * w[i];
        }
        for ex in &self.examples {
            let z = bias + ex.features.iter().map(|&(id, v)| w[id as usize] * v).sum::<f64>();
            // -log p(y|x) = softplus(-y z) with y in {-1, +1}
            let (loss, dz) = if ex.positive {
                (softplus(-z), sigmoid(z) - 1.0)
            } else {
                (softplus(z), sigmoid(z))
            };
            f += loss;
            grad[0] += dz;
            for &(id, v) in &ex.features {
                grad[id as usize + 1] += dz * v;
            }
        }
        f
    }
}

impl LogisticObjective {
    pub fn new(vocab: &Vocabulary, data: &[(FeatureVector, bool)], l2: f64) -> LogisticObjective {
        LogisticObjective {
            examples: data
                .iter()
                .map(|(fv, y)| SparseExample { features: vocab.index_vector(fv), positive: *y })
                .collect(),
            num_features: vocab.len(),
            l2,
        }
    }
}

/// A trained binary logistic model.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub vocab: Vocabulary,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub config: TrainConfig,
}

impl LinearModel {
    pub fn zero(vocab: Vocabulary, config: TrainConfig) -> LinearModel {
        let n = vocab.len();
        LinearModel { vocab, weights: vec![0.0; n], bias: 0.0, config }
    }

    /// Linear score; features absent from the vocabulary are ignored.
    pub fn score(&self, fv: &FeatureVector) -> f64 {
        self.bias
            + fv
                .iter()
                .filter_map(|(k, v)| self.vocab.id(k).map(|id| self.weights[id as usize] * v))
                .sum::<f64>()
    }

    pub fn probability(&self, fv: &FeatureVector) -> f64 {
        sigmoid(self.score(fv))
    }

    pub fn params(&self) -> Vec<f64> {
        std::iter::once(self.bias).chain(self.weights.iter().copied()).collect()
    }

    pub fn train(data: &[(FeatureVector, bool)], config: TrainConfig) -> Result<(LinearModel, OptimTrace)> {
        let positives = data.iter().filter(|(_, y)| *y).count();
        if positives == 0 || positives == data.len() {
            return Err(Error::Training(format!(
                "need at least one example of each label (got {positives} positive, {} negative)",
                data.len() - positives
            )));
        }
        let vocab = Vocabulary::build(data.iter().map(|(fv, _)| fv));
        let objective = LogisticObjective::new(&vocab, data, config.l2);
        let x0 = vec![0.0; objective.dim()];
        let (x, trace) = minimize(
            &objective,
            x0,
            OptimConfig { max_epochs: config.max_epochs, grad_tol: config.grad_tol },
        );
        log::debug!(
            "logistic training: {} epochs, objective {:.6}, grad norm {:.3e}",
            trace.epochs,
            trace.objective.last().copied().unwrap_or(f64::NAN),
            trace.grad_norm
        );
        let model = LinearModel { vocab, bias: x[0], weights: x[1..].to_vec(), config };
        Ok((model, trace))
    }

    pub fn write_block<W: Write>(&self, out: &mut W) -> Result<()> {
        let families = self
            .vocab
            .family_counts()
            .into_iter()
            .map(|(f, c)| format!("{f}={c}"))
            .collect::<Vec<_>>()
            .join(" ");
        writeln!(out, "families {families}")?;
        writeln!(out, "bias {}", self.bias)?;
        writeln!(out, "l2 {}", self.config.l2)?;
        writeln!(out, "max_epochs {}", self.config.max_epochs)?;
        writeln!(out, "grad_tol {}", self.config.grad_tol)?;
        writeln!(out, "seed {}", self.config.seed)?;
        writeln!(out, "features {}", self.vocab.len())?;
        for (id, (name, w)) in self.vocab.names().iter().zip(&self.weights).enumerate() {
            writeln!(out, "{id}\t{name}\t{w}")?;
        }
        Ok(())
    }

    pub fn read_block<R: BufRead>(reader: &mut LineReader<R>) -> Result<LinearModel> {
        reader.expect_key("families")?;
        let bias = reader.parse_key("bias")?;
        let l2 = reader.parse_key("l2")?;
        let max_epochs = reader.parse_key("max_epochs")?;
        let grad_tol = reader.parse_key("grad_tol")?;
        let seed = reader.parse_key("seed")?;
        let n: usize = reader.parse_key("features")?;
        let mut names = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for expected in 0..n {
            let fields = reader.fields(3)?;
            let id: usize = reader.parse_field(&fields[0])?;
            if id != expected {
                return Err(reader.error(format!("expected feature id {expected}, found {id}")));
            }
            names.push(fields[1].clone());
            weights.push(reader.parse_field(&fields[2])?);
        }
        let vocab = Vocabulary::from_names(names.iter().cloned());
        if vocab.names() != names.as_slice() {
            return Err(reader.error("feature names must be unique and sorted"));
        }
        Ok(LinearModel { vocab, weights, bias, config: TrainConfig { l2, max_epochs, grad_tol, seed } })
    }
}

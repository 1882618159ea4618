//! End-to-end glue: registry records to training sets, training sets to
//! models, and models to per-article predictions.

use std::fmt;
use std::str::FromStr;

use crate::age::AgeKind;
use crate::corpus::Document;
use crate::crf::{extract_age_crf, CrfConfig, CrfModel};
use crate::error::{Error, Result};
use crate::linear::TrainConfig;
use crate::passage::{extract_age_passage, PatternAnswerer, PatternTable, ProximityConfig};
use crate::pipeline::{run_pipeline, ArticlePrediction, PipelineConfig};
use crate::qa::{AgeAnswerer, QaModel};
use crate::sentfinder::MaxEntModel;
use crate::supervision::{
    build_bio_dataset, build_qa_dataset, build_sentfinder_dataset, dedup_records, description_sentences, BioSequence,
    ClinicalRecord, QaContext, QaPair, Quotas, SentFinderReport, SentenceExample,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DataConfig {
    pub seed: u64,
    pub quotas: Quotas,
    /// Per-kind cap on CRF sequences and on QA pairs.
    pub per_kind_quota: usize,
    pub qa_context: QaContext,
    /// Drop records whose criteria text repeats an earlier record's.
    pub dedup: bool,
    /// Add QA contexts from records that leave the asked age unrestricted.
    pub unanswerable: bool,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig { seed: 42, quotas: Quotas::default(), per_kind_quota: 10_000, qa_context: QaContext::Clause, dedup: true, unanswerable: true }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Datasets {
    pub sentfinder: Vec<SentenceExample>,
    pub report: SentFinderReport,
    pub bio_min: Vec<BioSequence>,
    pub bio_max: Vec<BioSequence>,
    pub qa: Vec<QaPair>,
}

/// Builds every training set. Negatives come from `negative_pool` when
/// given, otherwise from the records' description sentences.
pub fn build_datasets(records: &[ClinicalRecord], negative_pool: Option<&[String]>, cfg: &DataConfig) -> Datasets {
    let kept: Vec<&ClinicalRecord> = if cfg.dedup { dedup_records(records) } else { records.iter().collect() };
    if kept.len() < records.len() {
        log::info!("dropped {} records with duplicate criteria", records.len() - kept.len());
    }
    let own_negatives;
    let negatives = match negative_pool {
        Some(pool) => pool,
        None => {
            own_negatives = description_sentences(records);
            &own_negatives
        }
    };
    let (sentfinder, report) = build_sentfinder_dataset(&kept, negatives, cfg.quotas, cfg.seed);
    let mut qa = build_qa_dataset(&kept, AgeKind::Min, cfg.per_kind_quota, cfg.seed, cfg.qa_context, cfg.unanswerable);
    qa.extend(build_qa_dataset(&kept, AgeKind::Max, cfg.per_kind_quota, cfg.seed, cfg.qa_context, cfg.unanswerable));
    Datasets {
        sentfinder,
        report,
        bio_min: build_bio_dataset(&kept, AgeKind::Min, cfg.per_kind_quota, cfg.seed),
        bio_max: build_bio_dataset(&kept, AgeKind::Max, cfg.per_kind_quota, cfg.seed),
        qa,
    }
}

/// The models of the main pipeline.
#[derive(Debug, Clone)]
pub struct PipelineModels {
    pub sentfinder: MaxEntModel,
    pub qa: QaModel,
}

pub fn train_pipeline_models(data: &Datasets, cfg: TrainConfig) -> Result<PipelineModels> {
    let (sentfinder, trace) = MaxEntModel::train(&data.sentfinder, cfg)?;
    log::info!("sentence classifier: {} epochs, converged {}", trace.epochs, trace.converged);
    let qa = QaModel::train(&data.qa, cfg)?;
    Ok(PipelineModels { sentfinder, qa })
}

pub fn train_crf_models(data: &Datasets, cfg: CrfConfig) -> Result<(CrfModel, CrfModel)> {
    let (min, _) = CrfModel::train(&data.bio_min, cfg)?;
    let (max, _) = CrfModel::train(&data.bio_max, cfg)?;
    Ok((min, max))
}

/// Component removed from the pipeline in an ablation run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Ablation {
    NoSentfinder,
    NoQa,
    NoFilter,
}

impl Ablation {
    pub const ALL: [Ablation; 3] = [Ablation::NoSentfinder, Ablation::NoQa, Ablation::NoFilter];

    pub fn as_str(self) -> &'static str {
        match self {
            Ablation::NoSentfinder => "no_sentfinder",
            Ablation::NoQa => "no_qa",
            Ablation::NoFilter => "no_filter",
        }
    }
}

impl fmt::Display for Ablation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Ablation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ablation::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::input("ablate", format!("expected no_sentfinder, no_qa or no_filter, found {s:?}")))
    }
}

/// A configured extractor over one set of pipeline models.
pub struct Extractor<'m> {
    sentfinder: Option<&'m MaxEntModel>,
    answerer: Box<dyn AgeAnswerer + 'm>,
    config: PipelineConfig,
}

impl<'m> Extractor<'m> {
    pub fn new(models: &'m PipelineModels, mut config: PipelineConfig, ablations: &[Ablation]) -> Extractor<'m> {
        let sentfinder = (!ablations.contains(&Ablation::NoSentfinder)).then_some(&models.sentfinder);
        let answerer: Box<dyn AgeAnswerer + 'm> = if ablations.contains(&Ablation::NoQa) {
            Box::new(PatternAnswerer { table: PatternTable::range_only() })
        } else {
            Box::new(&models.qa)
        };
        if ablations.contains(&Ablation::NoFilter) {
            config.cues = None;
        }
        Extractor { sentfinder, answerer, config }
    }

    pub fn extract(&self, doc: &Document) -> ArticlePrediction {
        run_pipeline(doc, self.sentfinder, self.answerer.as_ref(), &self.config)
    }
}

impl<A: AgeAnswerer + ?Sized> AgeAnswerer for &A {
    fn answer(&self, s: &crate::corpus::Sentence, kind: AgeKind) -> Option<crate::AgeAnswer> {
        (**self).answer(s, kind)
    }
}

/// Passage-retrieval baseline prediction; each kind is extracted on its own.
pub fn baseline_passage(doc: &Document, cfg: &ProximityConfig, table: &PatternTable) -> ArticlePrediction {
    ArticlePrediction {
        id: doc.id.clone(),
        min: extract_age_passage(doc, AgeKind::Min, cfg, table),
        max: extract_age_passage(doc, AgeKind::Max, cfg, table),
        audit: Vec::new(),
    }
}

/// CRF baseline prediction; each kind is extracted on its own.
pub fn baseline_crf(doc: &Document, min: &CrfModel, max: &CrfModel) -> ArticlePrediction {
    ArticlePrediction {
        id: doc.id.clone(),
        min: extract_age_crf(min, doc),
        max: extract_age_crf(max, doc),
        audit: Vec::new(),
    }
}

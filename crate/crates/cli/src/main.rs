use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use minmaxage::corpus::{load_documents, Document, DocumentRecord, SectionKind};
use minmaxage::crf::{CrfConfig, CrfModel};
use minmaxage::eval::{corpus_stats, read_gold_csv, score_corpus, write_gold_csv, Metrics, PredictedAges};
use minmaxage::linear::TrainConfig;
use minmaxage::passage::{PatternTable, ProximityConfig};
use minmaxage::pipeline::{ArticlePrediction, FilterOrder, PipelineConfig, PredictionRecord, SpeculationCueSet};
use minmaxage::qa::QaModel;
use minmaxage::sentfinder::MaxEntModel;
use minmaxage::supervision::{load_records, BioSequence, QaContext, QaPair, Quotas, SentenceExample};
use minmaxage::synth::{generate_articles, generate_registry, DEFAULT_ARTICLES, DEFAULT_RECORDS};
use minmaxage::workflow::{baseline_crf, baseline_passage, build_datasets, Ablation, DataConfig, Extractor, PipelineModels};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;

const SENTFINDER_DATA: &str = "sentfinder.jsonl";
const BIO_MIN_DATA: &str = "bio-min.jsonl";
const BIO_MAX_DATA: &str = "bio-max.jsonl";
const QA_DATA: &str = "qa.jsonl";
const SENTFINDER_MODEL: &str = "sentfinder.model";
const QA_MODEL: &str = "qa.model";
const CRF_MIN_MODEL: &str = "crf-min.model";
const CRF_MAX_MODEL: &str = "crf-max.model";

/// Factual minimum/maximum participant age extraction from clinical trial articles.
#[derive(Parser)]
#[command(name = "minmaxage", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build training sets from registry records (JSONL).
    BuildData(BuildDataArgs),
    /// Train one model family from a dataset directory.
    #[command(subcommand)]
    Train(TrainCommand),
    /// Run the extraction pipeline over documents.
    Extract(ExtractArgs),
    /// Run a baseline extractor over documents.
    #[command(subcommand)]
    Baseline(BaselineCommand),
    /// Score predictions against a gold CSV.
    Evaluate(EvaluateArgs),
    /// Corpus statistics.
    Stats(StatsArgs),
    /// Score the full pipeline and each single-component ablation.
    Ablate(AblateArgs),
    /// Write a synthetic registry, article set and gold file.
    Synth(SynthArgs),
}

#[derive(Args)]
struct BuildDataArgs {
    #[arg(long)]
    registry: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Documents (file or directory) whose non-keyword sentences serve as negatives.
    #[arg(long)]
    negatives: Option<PathBuf>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 10_000)]
    min_quota: usize,
    #[arg(long, default_value_t = 10_000)]
    max_quota: usize,
    #[arg(long, default_value_t = 20_000)]
    negative_quota: usize,
    /// Per-kind cap on CRF sequences and QA pairs.
    #[arg(long, default_value_t = 10_000)]
    pair_quota: usize,
    /// QA context: `clause` or `criteria`.
    #[arg(long, default_value = "clause")]
    qa_context: QaContext,
    /// Keep records whose criteria text repeats an earlier one.
    #[arg(long)]
    no_dedup: bool,
    /// Skip QA contexts from records without the asked age.
    #[arg(long)]
    no_unanswerable: bool,
}

#[derive(Args)]
struct TrainArgs {
    /// Directory written by `build-data`.
    #[arg(long)]
    data: PathBuf,
    /// Output model directory.
    #[arg(long)]
    models: PathBuf,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    l2: f64,
    #[arg(long)]
    max_epochs: Option<usize>,
}

#[derive(Subcommand)]
enum TrainCommand {
    Sentfinder(TrainArgs),
    Qa(TrainArgs),
    Crf(TrainArgs),
}

#[derive(Args)]
struct DocsArgs {
    /// Document file (JSON, JSONL or plain text) or directory of them.
    #[arg(long)]
    docs: PathBuf,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    #[arg(long, value_delimiter = ',', default_value = "abstract,method,result")]
    sections: Vec<SectionKind>,
    /// Speculation cue list, one cue per line.
    #[arg(long)]
    cues: Option<PathBuf>,
    /// Apply the speculation filter `before` or `after` aggregation.
    #[arg(long, default_value = "before")]
    filter_order: FilterOrder,
}

#[derive(Args)]
struct ExtractArgs {
    #[command(flatten)]
    docs: DocsArgs,
    #[arg(long)]
    models: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Component to remove: no_sentfinder, no_qa or no_filter (repeatable).
    #[arg(long)]
    ablate: Vec<Ablation>,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Subcommand)]
enum BaselineCommand {
    Passage(PassageArgs),
    Crf(CrfBaselineArgs),
}

#[derive(Args)]
struct PassageArgs {
    #[command(flatten)]
    docs: DocsArgs,
    #[arg(long)]
    out: PathBuf,
    /// Pattern table TSV (id, kind, template).
    #[arg(long)]
    patterns: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
}

#[derive(Args)]
struct CrfBaselineArgs {
    #[command(flatten)]
    docs: DocsArgs,
    #[arg(long)]
    models: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    gold: PathBuf,
    /// Print the metrics as JSON instead of a table.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    docs: PathBuf,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct AblateArgs {
    #[command(flatten)]
    docs: DocsArgs,
    #[arg(long)]
    models: PathBuf,
    #[arg(long)]
    gold: PathBuf,
    #[command(flatten)]
    pipeline: PipelineArgs,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_RECORDS)]
    records: usize,
    #[arg(long, default_value_t = DEFAULT_ARTICLES)]
    articles: usize,
    #[arg(long, default_value_t = 42)]
    registry_seed: u64,
    #[arg(long, default_value_t = 7)]
    article_seed: u64,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::BuildData(a) => build_data(a),
        Command::Train(t) => train(t),
        Command::Extract(a) => extract(a),
        Command::Baseline(b) => baseline(b),
        Command::Evaluate(a) => evaluate(a),
        Command::Stats(a) => stats(a),
        Command::Ablate(a) => ablate(a),
        Command::Synth(a) => synth(a),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    let file = fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut out = create(path)?;
    for item in items {
        serde_json::to_writer(&mut out, item)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    read(path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| serde_json::from_str(l).with_context(|| format!("{} line {}", path.display(), n + 1)))
        .collect()
}

/// Loads a document file, or every file of a directory in name order.
fn load_docs(path: &Path) -> Result<Vec<Document>> {
    let files = if path.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(path)
            .with_context(|| format!("cannot list {}", path.display()))?
            .map(|e| e.map(|e| e.path()))
            .collect::<std::io::Result<_>>()?;
        files.retain(|f| f.is_file());
        files.sort();
        files
    } else {
        vec![path.to_path_buf()]
    };
    let mut docs = Vec::new();
    for f in files {
        let id = f.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
        docs.extend(load_documents(&read(&f)?, &id).with_context(|| format!("in {}", f.display()))?);
    }
    Ok(docs)
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?)
}

/// Runs `f` over the documents in parallel, keeping input order.
fn map_docs<F>(docs: &[Document], jobs: usize, f: F) -> Result<Vec<ArticlePrediction>>
where
    F: Fn(&Document) -> ArticlePrediction + Sync,
{
    Ok(pool(jobs)?.install(|| docs.par_iter().map(|d| f(d)).collect()))
}

fn write_predictions(path: &Path, docs: &[Document], preds: &[ArticlePrediction]) -> Result<()> {
    let records: Vec<PredictionRecord> = preds.iter().zip(docs).map(|(p, d)| p.to_record(d)).collect();
    write_jsonl(path, &records)
}

fn load_model<T>(dir: &Path, name: &str, read_fn: fn(BufReader<fs::File>) -> minmaxage::Result<T>) -> Result<T> {
    let path = dir.join(name);
    let file = fs::File::open(&path).with_context(|| format!("cannot open {}", path.display()))?;
    read_fn(BufReader::new(file)).with_context(|| format!("in {}", path.display()))
}

fn save_model(path: &Path, write_fn: impl FnOnce(&mut BufWriter<fs::File>) -> minmaxage::Result<()>) -> Result<()> {
    let mut out = create(path)?;
    write_fn(&mut out)?;
    out.flush()?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn build_data(a: BuildDataArgs) -> Result<()> {
    let (records, skipped) = load_records(&read(&a.registry)?).with_context(|| format!("in {}", a.registry.display()))?;
    if skipped > 0 {
        log::warn!("skipped {skipped} records without usable ages");
    }
    let negatives: Option<Vec<String>> = match &a.negatives {
        Some(p) => Some(
            load_docs(p)?
                .iter()
                .flat_map(Document::sentences)
                .filter(|s| !s.has_age_keyword())
                .map(|s| s.text.clone())
                .collect(),
        ),
        None => None,
    };
    let cfg = DataConfig {
        seed: a.seed,
        quotas: Quotas { min: a.min_quota, max: a.max_quota, negative: a.negative_quota },
        per_kind_quota: a.pair_quota,
        qa_context: a.qa_context,
        dedup: !a.no_dedup,
        unanswerable: !a.no_unanswerable,
    };
    let data = build_datasets(&records, negatives.as_deref(), &cfg);
    write_jsonl(&a.out.join(SENTFINDER_DATA), &data.sentfinder)?;
    write_jsonl(&a.out.join(BIO_MIN_DATA), &data.bio_min)?;
    write_jsonl(&a.out.join(BIO_MAX_DATA), &data.bio_max)?;
    write_jsonl(&a.out.join(QA_DATA), &data.qa)?;
    println!("records {}", records.len());
    println!("sentence classifier: {}", data.report);
    println!("bio sequences: min {} max {}", data.bio_min.len(), data.bio_max.len());
    println!("qa pairs: {}", data.qa.len());
    Ok(())
}

fn train(t: TrainCommand) -> Result<()> {
    match t {
        TrainCommand::Sentfinder(a) => {
            let examples: Vec<SentenceExample> = read_jsonl(&a.data.join(SENTFINDER_DATA))?;
            let mut cfg = TrainConfig { l2: a.l2, seed: a.seed, ..Default::default() };
            cfg.max_epochs = a.max_epochs.unwrap_or(cfg.max_epochs);
            let (model, trace) = MaxEntModel::train(&examples, cfg)?;
            println!("sentence classifier: {} epochs, converged {}", trace.epochs, trace.converged);
            save_model(&a.models.join(SENTFINDER_MODEL), |w| model.write(w))
        }
        TrainCommand::Qa(a) => {
            let pairs: Vec<QaPair> = read_jsonl(&a.data.join(QA_DATA))?;
            let mut cfg = TrainConfig { l2: a.l2, seed: a.seed, ..Default::default() };
            cfg.max_epochs = a.max_epochs.unwrap_or(cfg.max_epochs);
            let model = QaModel::train(&pairs, cfg)?;
            println!("qa scorer: {} pairs", pairs.len());
            save_model(&a.models.join(QA_MODEL), |w| model.write(w))
        }
        TrainCommand::Crf(a) => {
            let mut cfg = CrfConfig { l2: a.l2, seed: a.seed, ..Default::default() };
            cfg.max_epochs = a.max_epochs.unwrap_or(cfg.max_epochs);
            for (data, model) in [(BIO_MIN_DATA, CRF_MIN_MODEL), (BIO_MAX_DATA, CRF_MAX_MODEL)] {
                let seqs: Vec<BioSequence> = read_jsonl(&a.data.join(data))?;
                let (crf, trace) = CrfModel::train(&seqs, cfg)?;
                println!("crf {}: {} epochs, converged {}", crf.kind, trace.epochs, trace.converged);
                save_model(&a.models.join(model), |w| crf.write(w))?;
            }
            Ok(())
        }
    }
}

fn pipeline_config(a: &PipelineArgs) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig { threshold: a.threshold, filter_order: a.filter_order, ..Default::default() };
    cfg.sections = a.sections.iter().copied().collect();
    if let Some(p) = &a.cues {
        cfg.cues = Some(SpeculationCueSet::parse(&read(p)?).with_context(|| format!("in {}", p.display()))?);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn load_pipeline_models(dir: &Path) -> Result<PipelineModels> {
    Ok(PipelineModels {
        sentfinder: load_model(dir, SENTFINDER_MODEL, MaxEntModel::read)?,
        qa: load_model(dir, QA_MODEL, QaModel::read)?,
    })
}

fn extract(a: ExtractArgs) -> Result<()> {
    let config = pipeline_config(&a.pipeline)?;
    let models = load_pipeline_models(&a.models)?;
    let docs = load_docs(&a.docs.docs)?;
    let extractor = Extractor::new(&models, config, &a.ablate);
    let preds = map_docs(&docs, a.docs.jobs, |d| extractor.extract(d))?;
    write_predictions(&a.out, &docs, &preds)?;
    log::info!("wrote {} predictions to {}", preds.len(), a.out.display());
    Ok(())
}

fn baseline(b: BaselineCommand) -> Result<()> {
    match b {
        BaselineCommand::Passage(a) => {
            let table = match &a.patterns {
                Some(p) => PatternTable::parse(&read(p)?).with_context(|| format!("in {}", p.display()))?,
                None => PatternTable::default_table(),
            };
            if !(a.sigma > 0.0) {
                bail!("--sigma must be positive, found {}", a.sigma);
            }
            let cfg = ProximityConfig { sigma: a.sigma, ..Default::default() };
            let docs = load_docs(&a.docs.docs)?;
            let preds = map_docs(&docs, a.docs.jobs, |d| baseline_passage(d, &cfg, &table))?;
            write_predictions(&a.out, &docs, &preds)
        }
        BaselineCommand::Crf(a) => {
            let min = load_model(&a.models, CRF_MIN_MODEL, CrfModel::read)?;
            let max = load_model(&a.models, CRF_MAX_MODEL, CrfModel::read)?;
            let docs = load_docs(&a.docs.docs)?;
            let preds = map_docs(&docs, a.docs.jobs, |d| baseline_crf(d, &min, &max))?;
            write_predictions(&a.out, &docs, &preds)
        }
    }
}

fn load_gold(path: &Path) -> Result<Vec<minmaxage::eval::GoldAnnotation>> {
    let file = fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    read_gold_csv(file).with_context(|| format!("in {}", path.display()))
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let records: Vec<PredictionRecord> = read_jsonl(&a.pred)?;
    let gold = load_gold(&a.gold)?;
    let preds: Vec<PredictedAges> = records.iter().map(Into::into).collect();
    let metrics = score_corpus(&preds, &gold)?;
    if a.json {
        println!("{}", serde_json::to_string_pretty(&metrics)?);
    } else {
        print!("{metrics}");
    }
    Ok(())
}

fn stats(a: StatsArgs) -> Result<()> {
    let st = corpus_stats(&load_docs(&a.docs)?);
    if a.json {
        println!("{}", serde_json::to_string_pretty(&st)?);
    } else {
        print!("{st}");
    }
    Ok(())
}

#[derive(Serialize)]
struct AblationRow {
    system: String,
    metrics: Metrics,
}

fn ablate(a: AblateArgs) -> Result<()> {
    let config = pipeline_config(&a.pipeline)?;
    let models = load_pipeline_models(&a.models)?;
    let docs = load_docs(&a.docs.docs)?;
    let gold = load_gold(&a.gold)?;
    let mut rows = Vec::new();
    let runs = std::iter::once(None).chain(Ablation::ALL.into_iter().map(Some));
    for ablation in runs {
        let ablations: Vec<Ablation> = ablation.into_iter().collect();
        let extractor = Extractor::new(&models, config.clone(), &ablations);
        let preds = map_docs(&docs, a.docs.jobs, |d| extractor.extract(d))?;
        let preds: Vec<PredictedAges> = preds.iter().map(Into::into).collect();
        let system = ablation.map_or_else(|| "full".to_string(), |x| x.to_string());
        rows.push(AblationRow { system, metrics: score_corpus(&preds, &gold)? });
    }
    if a.json {
        println!("{}", serde_json::to_string_pretty(&rows)?);
        return Ok(());
    }
    println!("{:<15}{:>8}{:>8}{:>8}{:>8}{:>8}{:>8}", "system", "min R", "min P", "min F", "max R", "max P", "max F");
    for r in &rows {
        let (n, x) = (r.metrics.min, r.metrics.max);
        println!(
            "{:<15}{:>8.1}{:>8.1}{:>8.1}{:>8.1}{:>8.1}{:>8.1}",
            r.system,
            100.0 * n.recall,
            100.0 * n.precision,
            100.0 * n.f1,
            100.0 * x.recall,
            100.0 * x.precision,
            100.0 * x.f1
        );
    }
    Ok(())
}

fn synth(a: SynthArgs) -> Result<()> {
    let registry = generate_registry(a.records, a.registry_seed);
    write_jsonl(&a.out.join("registry.jsonl"), &registry)?;
    let articles = generate_articles(a.articles, a.article_seed);
    let docs: Vec<&DocumentRecord> = articles.iter().map(|x| &x.document).collect();
    write_jsonl(&a.out.join("articles.jsonl"), &docs)?;
    let gold: Vec<_> = articles.iter().map(|x| x.gold.clone()).collect();
    let mut out = create(&a.out.join("gold.csv"))?;
    write_gold_csv(&mut out, &gold)?;
    out.flush()?;
    println!("wrote {} records and {} articles to {}", registry.len(), articles.len(), a.out.display());
    Ok(())
}

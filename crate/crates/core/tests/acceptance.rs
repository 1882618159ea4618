//! One PASS/FAIL line per acceptance criterion; exits nonzero if any fails.

use std::time::{Duration, Instant};

use minmaxage::corpus::{tokenize, Document, SectionKind, Sentence};
use minmaxage::crf::{log_sum_exp, sequence_score, viterbi, CrfObjective, Lattice, Transitions};
use minmaxage::eval::{score_corpus, KindMetrics, PredictedAges};
use minmaxage::fixtures::*;
use minmaxage::linear::TrainConfig;
use minmaxage::optim::{finite_difference, Objective};
use minmaxage::passage::proximity_score;
use minmaxage::pipeline::{aggregate, filter_speculative, PipelineConfig, SpeculationCueSet};
use minmaxage::sentfinder;
use minmaxage::supervision::{load_records, ClinicalRecord};
use minmaxage::synth::{generate_articles, generate_registry, DEFAULT_ARTICLES, DEFAULT_RECORDS};
use minmaxage::workflow::{build_datasets, train_pipeline_models, Ablation, DataConfig, Datasets, Extractor};
use minmaxage::{AgeAnswer, AgeKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn labelings(n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out.into_iter().flat_map(|p| (0..3).map(move |y| [p.clone(), vec![y]].concat())).collect();
    }
    out
}

fn crf_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let pairs = 200;
    let (mut argmax_ok, mut worst): (usize, f64) = (0, 0.0);
    for _ in 0..pairs {
        let n = rng.gen_range(1..=8);
        let emit: Vec<[f64; 3]> = (0..n).map(|_| [(); 3].map(|_| rng.gen_range(-3.0..3.0))).collect();
        let trans: Transitions = [(); 3].map(|_| [(); 3].map(|_| rng.gen_range(-3.0..3.0)));
        let all = labelings(n);
        let scores: Vec<f64> = all.iter().map(|y| sequence_score(&emit, &trans, y)).collect();
        let best = (0..all.len()).fold(0, |b, i| if scores[i] > scores[b] { i } else { b });
        argmax_ok += (viterbi(&emit, &trans) == all[best]) as usize;
        let log_z = log_sum_exp(&scores);
        let mut unary = vec![[0.0; 3]; n];
        for (y, s) in all.iter().zip(&scores) {
            for (i, &l) in y.iter().enumerate() {
                unary[i][l] += (s - log_z).exp();
            }
        }
        let lat = Lattice::compute(&emit, &trans);
        worst = worst.max((lat.log_z - log_z).abs());
        for (got, want) in lat.marginals().iter().zip(&unary) {
            for y in 0..3 {
                worst = worst.max((got[y] - want[y]).abs());
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        argmax_ok == pairs && worst < 1e-9 && elapsed < Duration::from_secs(10),
        format!("{argmax_ok}/{pairs} argmax exact, max marginal error {worst:.1e}, {elapsed:.2?}"),
    )
}

fn registry(n: usize, seed: u64) -> Vec<ClinicalRecord> {
    let jsonl: String = generate_registry(n, seed).iter().map(|r| serde_json::to_string(r).unwrap() + "\n").collect();
    load_records(&jsonl).unwrap().0
}

fn worst_gradient_error<O: Objective>(obj: &O, probes: usize, rng: &mut ChaCha8Rng) -> f64 {
    let mut worst: f64 = 0.0;
    for _ in 0..probes {
        let x: Vec<f64> = (0..obj.dim()).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let mut g = vec![0.0; obj.dim()];
        obj.evaluate(&x, &mut g);
        let i = rng.gen_range(0..obj.dim());
        let fd = finite_difference(obj, &x, i, 1e-5);
        worst = worst.max((fd - g[i]).abs() / fd.abs().max(g[i].abs()).max(1e-6));
    }
    worst
}

fn gradient_checks() -> Outcome {
    let data = build_datasets(&registry(60, 3), None, &DataConfig::default());
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (maxent, _) = sentfinder::objective(&data.sentfinder[..40.min(data.sentfinder.len())], 1.0);
    let maxent_err = worst_gradient_error(&maxent, 10, &mut rng);
    let crf = CrfObjective::new(&data.bio_min[..10], 1.0);
    let crf_err = worst_gradient_error(&crf, 10, &mut rng);
    outcome(
        maxent_err < 1e-4 && crf_err < 1e-4,
        format!("10 probes each, worst relative error maxent {maxent_err:.1e}, crf {crf_err:.1e}"),
    )
}

fn proximity_fixture() -> Outcome {
    let e = std::f64::consts::E;
    let cases = [
        (proximity_score(2, &[1, 3], 1.0), 1.0 / e),
        (proximity_score(4, &[4], 1.0), 1.0),
        (proximity_score(0, &[5], 1.0), (-25.0f64).exp()),
    ];
    let worst = cases.iter().map(|(got, want)| (got - want).abs()).fold(0.0, f64::max);
    outcome(worst < 1e-12, format!("e^-1, 1, e^-25 reproduced, max error {worst:.1e}"))
}

fn answer(kind: AgeKind, value: u32, confidence: f64, sentence_index: usize) -> AgeAnswer {
    AgeAnswer { value, confidence, kind, sentence_index, span: (0, 2) }
}

fn conflict_fixture() -> Outcome {
    let p = aggregate(vec![answer(AgeKind::Min, 16, 0.956, 0)], vec![answer(AgeKind::Max, 16, 0.624, 1)], 0.5);
    let min = p.min.as_ref().map(|a| a.value);
    let max = p.max.as_ref().map(|a| a.value);
    outcome(min == Some(16) && max.is_none(), format!("min {min:?}, max {max:?}"))
}

fn located(text: &str, value: &str, kind: AgeKind) -> (Sentence, AgeAnswer) {
    let s = Sentence::new(text, SectionKind::Method, 0);
    let t = tokenize(text).into_iter().find(|t| t.text == value).unwrap();
    let a = AgeAnswer { value: value.parse().unwrap(), confidence: 0.9, kind, sentence_index: 0, span: (t.start, t.end) };
    (s, a)
}

fn speculation_fixtures() -> Outcome {
    let cues = SpeculationCueSet::default();
    let kept = |text: &str, value: &str, kind: AgeKind| {
        let (s, a) = located(text, value, kind);
        filter_speculative(a, &s, &cues).is_some()
    };
    let results = [
        ("ex3 18 filtered", !kept(EXAMPLE_3, "18", AgeKind::Min)),
        ("ex3 60 filtered", !kept(EXAMPLE_3, "60", AgeKind::Max)),
        ("ex4 18 filtered", !kept(EXAMPLE_4, "18", AgeKind::Min)),
        ("ex1 18 kept", kept(EXAMPLE_1, "18", AgeKind::Min)),
        ("ex1 23 kept", kept(EXAMPLE_1, "23", AgeKind::Max)),
        ("ex7 24 kept", kept(EXAMPLE_7_SPECULATIVE, "24", AgeKind::Max)),
    ];
    let failed: Vec<&str> = results.iter().filter(|r| !r.1).map(|r| r.0).collect();
    outcome(failed.is_empty(), if failed.is_empty() { "6/6 fixtures".to_string() } else { format!("failed: {failed:?}") })
}

fn metrics_arithmetic() -> Outcome {
    let m = KindMetrics::from_counts(23, 29, 35);
    let (r, p, f) = (100.0 * m.recall, 100.0 * m.precision, 100.0 * m.f1);
    let pass = (r - 65.7).abs() <= 0.05 && (p - 79.3).abs() <= 0.05 && (f - 71.9).abs() <= 0.05;
    outcome(pass, format!("R/P/F = {r:.2}/{p:.2}/{f:.2}"))
}

struct Run {
    datasets: Vec<u8>,
    models: Vec<u8>,
    predictions: Vec<u8>,
    full: (f64, f64),
    no_qa: (f64, f64),
}

fn jsonl<T: serde::Serialize>(items: &[T]) -> Vec<u8> {
    items.iter().flat_map(|x| serde_json::to_vec(x).unwrap().into_iter().chain([b'\n'])).collect()
}

fn serialized(data: &Datasets) -> Vec<u8> {
    [jsonl(&data.sentfinder), jsonl(&data.bio_min), jsonl(&data.bio_max), jsonl(&data.qa)].concat()
}

/// Registry and articles to predictions, as the command-line tool runs it.
fn full_run() -> Run {
    let records = registry(DEFAULT_RECORDS, 42);
    let data = build_datasets(&records, None, &DataConfig::default());
    let models = train_pipeline_models(&data, TrainConfig::default()).unwrap();
    let mut model_bytes = Vec::new();
    models.sentfinder.write(&mut model_bytes).unwrap();
    models.qa.write(&mut model_bytes).unwrap();
    let articles = generate_articles(DEFAULT_ARTICLES, 7);
    let docs: Vec<Document> =
        articles.iter().map(|a| Document::from_json(&serde_json::to_value(&a.document).unwrap()).unwrap()).collect();
    let gold: Vec<_> = articles.iter().map(|a| a.gold.clone()).collect();
    let mut predictions = Vec::new();
    let mut score = |ablations: &[Ablation]| {
        let ex = Extractor::new(&models, PipelineConfig::default(), ablations);
        let preds: Vec<_> = docs.iter().map(|d| ex.extract(d)).collect();
        if ablations.is_empty() {
            let records: Vec<_> = preds.iter().zip(&docs).map(|(p, d)| p.to_record(d)).collect();
            predictions = jsonl(&records);
        }
        let preds: Vec<PredictedAges> = preds.iter().map(Into::into).collect();
        let m = score_corpus(&preds, &gold).unwrap();
        (m.min.f1, m.max.f1)
    };
    let full = score(&[]);
    let no_qa = score(&[Ablation::NoQa]);
    Run { datasets: serialized(&data), models: model_bytes, predictions, full, no_qa }
}

fn end_to_end(run: &Run, elapsed: Duration) -> Outcome {
    let (f_min, f_max) = run.full;
    let (q_min, q_max) = run.no_qa;
    let pass = f_min >= 0.90 && f_max >= 0.90 && (q_min < f_min || q_max < f_max) && elapsed < Duration::from_secs(300);
    outcome(
        pass,
        format!(
            "full F min {:.1} max {:.1}; no_qa F min {:.1} max {:.1}; {elapsed:.2?}",
            100.0 * f_min,
            100.0 * f_max,
            100.0 * q_min,
            100.0 * q_max
        ),
    )
}

fn determinism(a: &Run, b: &Run) -> Outcome {
    let same = [("datasets", &a.datasets, &b.datasets), ("models", &a.models, &b.models), ("predictions", &a.predictions, &b.predictions)];
    let differing: Vec<&str> = same.iter().filter(|(_, x, y)| x != y).map(|(n, _, _)| *n).collect();
    let bytes = a.datasets.len() + a.models.len() + a.predictions.len();
    outcome(
        differing.is_empty() && !a.predictions.is_empty(),
        if differing.is_empty() { format!("{bytes} bytes identical across two runs") } else { format!("differ: {differing:?}") },
    )
}

fn main() {
    let start = Instant::now();
    let first = full_run();
    let elapsed = start.elapsed();
    let second = full_run();
    let report = [
        ("crf oracle equivalence", crf_oracle()),
        ("gradient checks", gradient_checks()),
        ("proximity score fixture", proximity_fixture()),
        ("conflict resolution fixture", conflict_fixture()),
        ("speculation fixtures", speculation_fixtures()),
        ("metrics arithmetic", metrics_arithmetic()),
        ("end-to-end synthetic corpus", end_to_end(&first, elapsed)),
        ("determinism", determinism(&first, &second)),
    ];
    for (name, o) in &report {
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    let failed: Vec<&str> = report.iter().filter(|(_, o)| !o.pass).map(|(n, _)| *n).collect();
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}

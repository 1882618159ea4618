use minmaxage::corpus::{tokenize, SectionKind, Sentence};
use minmaxage::crf::{BioLabel, CrfConfig, CrfModel, CrfObjective};
use minmaxage::fixtures::NSCLC_CLAUSE;
use minmaxage::linear::TrainConfig;
use minmaxage::optim::{finite_difference, Objective};
use minmaxage::qa::{AgeAnswerer, QaModel};
use minmaxage::sentfinder::{self, MaxEntModel};
use minmaxage::supervision::{BioSequence, ExampleKind, QaPair, SentenceExample, SentenceLabel};
use minmaxage::AgeKind;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sentence_examples() -> Vec<SentenceExample> {
    let pos = ["aged 18-24 years", "at least 21 years of age", "Age 65 years or older", "between 18 and 60 years"];
    let neg = ["smoked daily", "the trial was randomized", "written informed consent", "no prior chemotherapy"];
    let ex = |t: &&str, p: bool| SentenceExample {
        text: t.to_string(),
        label: if p { SentenceLabel::Positive } else { SentenceLabel::Negative },
        kind: if p { ExampleKind::Min } else { ExampleKind::None },
    };
    pos.iter().map(|t| ex(t, true)).chain(neg.iter().map(|t| ex(t, false))).collect()
}

fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

fn check_gradient<O: Objective>(obj: &O, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let x: Vec<f64> = (0..obj.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut g = vec![0.0; obj.dim()];
        obj.evaluate(&x, &mut g);
        let coord = rng.gen_range(0..obj.dim());
        let fd = finite_difference(obj, &x, coord, 1e-5);
        worst = worst.max(relative_error(fd, g[coord]));
    }
    worst
}

#[test]
fn maxent_gradient_matches_finite_differences() {
    let (obj, _) = sentfinder::objective(&sentence_examples(), 1.0);
    let err = check_gradient(&obj, 11);
    assert!(err < 1e-5, "worst relative error {err}");
}

#[test]
fn maxent_training_lowers_objective() {
    let data = sentence_examples();
    let (model, trace) = MaxEntModel::train(&data, TrainConfig::default()).unwrap();
    let (obj, _) = sentfinder::objective(&data, 1.0);
    let mut g = vec![0.0; obj.dim()];
    let at_zero = obj.evaluate(&vec![0.0; obj.dim()], &mut g);
    let trained = obj.evaluate(&model.inner.params(), &mut g);
    assert!(trained <= at_zero);
    assert!(trace.objective.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn maxent_training_is_deterministic() {
    let data = sentence_examples();
    let bytes = || {
        let (m, _) = MaxEntModel::train(&data, TrainConfig::default()).unwrap();
        let mut buf = Vec::new();
        m.write(&mut buf).unwrap();
        buf
    };
    assert_eq!(bytes(), bytes());
}

fn nsclc_sequence() -> BioSequence {
    let tokens: Vec<String> = tokenize(NSCLC_CLAUSE).into_iter().map(|t| t.text).collect();
    let labels = tokens.iter().map(|t| if t == "21" { BioLabel::B } else { BioLabel::O }).collect();
    BioSequence { kind: AgeKind::Min, tokens, labels, pos: None }
}

#[test]
fn crf_gradient_matches_finite_differences() {
    let mut other = nsclc_sequence();
    other.tokens[5] = "30".into();
    other.labels[6] = BioLabel::I;
    let obj = CrfObjective::new(&[nsclc_sequence(), other], 1.0);
    let err = check_gradient(&obj, 5);
    assert!(err < 1e-4, "worst relative error {err}");
}

#[test]
fn crf_recovers_repeated_training_instance() {
    let data = vec![nsclc_sequence(); 50];
    let (model, _) = CrfModel::train(&data, CrfConfig::default()).unwrap();
    assert_eq!(model.viterbi_decode(&data[0].tokens, None), data[0].labels);
}

#[test]
fn crf_training_is_deterministic() {
    let data = vec![nsclc_sequence(); 5];
    let bytes = || {
        let (m, _) = CrfModel::train(&data, CrfConfig::default()).unwrap();
        let mut buf = Vec::new();
        m.write(&mut buf).unwrap();
        buf
    };
    assert_eq!(bytes(), bytes());
}

fn range_pair(kind: AgeKind, lo: u32, hi: u32) -> QaPair {
    let context = format!("aged {lo}-{hi} years");
    let tokens = tokenize(&context);
    let value = if kind == AgeKind::Min { lo } else { hi };
    let idx = if kind == AgeKind::Min { 1 } else { 3 };
    QaPair {
        context,
        kind,
        answer_value: Some(value),
        answer_span: Some((tokens[idx].start, tokens[idx].end)),
    }
}

#[test]
fn qa_learns_range_endpoints() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut pairs = Vec::new();
    for _ in 0..500 {
        let lo = rng.gen_range(10..40);
        let hi = rng.gen_range(lo + 1..90);
        pairs.push(range_pair(AgeKind::Min, lo, hi));
        pairs.push(range_pair(AgeKind::Max, lo, hi));
    }
    let model = QaModel::train(&pairs, TrainConfig::default()).unwrap();
    let mut correct = 0;
    let mut total = 0;
    for _ in 0..200 {
        let lo = rng.gen_range(10..40);
        let hi = rng.gen_range(lo + 1..90);
        let s = Sentence::new(&format!("aged {lo}-{hi} years"), SectionKind::Method, 0);
        for (kind, want) in [(AgeKind::Min, lo), (AgeKind::Max, hi)] {
            total += 1;
            if model.answer(&s, kind).map(|a| a.value) == Some(want) {
                correct += 1;
            }
        }
    }
    assert!(correct as f64 >= 0.99 * total as f64, "{correct}/{total}");
}

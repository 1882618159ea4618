use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::sync::atomic::{AtomicUsize, Ordering};

use minmaxage::corpus::{parse_integer_token, tokenize, Document, SectionKind, Sentence};
use minmaxage::eval::{score_corpus, GoldAnnotation, PredictedAges};
use minmaxage::fixtures::*;
use minmaxage::passage::proximity_score;
use minmaxage::pipeline::{run_pipeline, PipelineConfig, Stage};
use minmaxage::qa::AgeAnswerer;
use minmaxage::supervision::{build_bio_dataset, build_qa_dataset, load_records, QaContext};
use minmaxage::synth::generate_registry;
use minmaxage::{AgeAnswer, AgeKind};
use proptest::prelude::*;

fn text_strategy() -> impl Strategy<Value = String> {
    prop::collection::vec(
        prop_oneof![
            "[a-zA-Z]{1,8}",
            "[0-9]{1,4}",
            Just(" ".to_string()),
            Just("-".to_string()),
            Just("\u{2013}".to_string()),
            Just("\u{2265}".to_string()),
            Just("<=".to_string()),
            Just(".".to_string()),
            Just(",".to_string()),
            Just("%".to_string()),
            Just("\t".to_string()),
        ],
        0..30,
    )
    .prop_map(|parts| parts.concat())
}

proptest! {
    #[test]
    fn tokens_cover_all_non_whitespace(text in text_strategy()) {
        let tokens = tokenize(&text);
        let mut cursor = 0;
        for t in &tokens {
            prop_assert!(t.start >= cursor);
            prop_assert!(text[cursor..t.start].chars().all(char::is_whitespace));
            prop_assert_eq!(&text[t.start..t.end], t.text.as_str());
            cursor = t.end;
        }
        prop_assert!(text[cursor..].chars().all(char::is_whitespace));
    }

    #[test]
    fn digit_runs_are_isolated(text in text_strategy()) {
        for t in tokenize(&text) {
            let digits = t.text.chars().filter(char::is_ascii_digit).count();
            prop_assert!(digits == 0 || digits == t.text.chars().count(), "{:?}", t.text);
        }
    }

    #[test]
    fn tokenization_is_idempotent(text in text_strategy()) {
        let first: Vec<String> = tokenize(&text).into_iter().map(|t| t.text).collect();
        let second: Vec<String> = tokenize(&first.join(" ")).into_iter().map(|t| t.text).collect();
        prop_assert_eq!(first, second);
    }

    #[test]
    fn proximity_in_unit_interval_and_symmetric(
        c in 0usize..200,
        qs in prop::collection::vec(0usize..200, 0..6),
        sigma in 0.1f64..10.0,
    ) {
        let s = proximity_score(c, &qs, sigma);
        prop_assert!((0.0..=1.0).contains(&s));
        let mirrored: Vec<usize> = qs.iter().map(|&q| 400 - q).collect();
        prop_assert!((proximity_score(400 - c, &mirrored, sigma) - s).abs() < 1e-12);
    }

    #[test]
    fn proximity_grows_with_sigma(
        c in 0usize..50,
        qs in prop::collection::vec(0usize..50, 1..6),
        a in 0.1f64..5.0,
        b in 0.1f64..5.0,
    ) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(proximity_score(c, &qs, lo) <= proximity_score(c, &qs, hi));
    }

    #[test]
    fn scoring_is_permutation_invariant(
        rows in prop::collection::vec((prop::option::of(10u32..15), prop::option::of(40u32..45), prop::option::of(10u32..15), prop::option::of(40u32..45)), 1..30),
        rotate in 0usize..30,
    ) {
        let golds: Vec<GoldAnnotation> = rows.iter().enumerate().map(|(i, r)| GoldAnnotation { id: i.to_string(), min: r.0, max: r.1 }).collect();
        let preds: Vec<PredictedAges> = rows.iter().enumerate().map(|(i, r)| PredictedAges { id: i.to_string(), min: r.2, max: r.3 }).collect();
        let m = score_corpus(&preds, &golds).unwrap();
        let mut g2 = golds.clone();
        let mut p2 = preds.clone();
        g2.rotate_left(rotate % golds.len());
        p2.reverse();
        prop_assert_eq!(score_corpus(&p2, &g2).unwrap(), m);
        for k in [m.min, m.max] {
            prop_assert!(k.correct <= k.predicted.min(k.annotated));
            prop_assert!((0.0..=1.0).contains(&k.f1));
            prop_assert_eq!(k.f1 == 0.0, k.correct == 0);
            if k.precision + k.recall > 0.0 {
                prop_assert!((k.f1 - 2.0 * k.precision * k.recall / (k.precision + k.recall)).abs() < 1e-12);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn distant_supervision_outputs_are_well_formed(seed in 0u64..1000) {
        let jsonl: String = generate_registry(60, seed).iter().map(|r| serde_json::to_string(r).unwrap() + "\n").collect();
        let (records, _) = load_records(&jsonl).unwrap();
        let refs: Vec<_> = records.iter().collect();
        for kind in AgeKind::BOTH {
            for ctx in [QaContext::Clause, QaContext::Criteria] {
                for p in build_qa_dataset(&refs, kind, 1000, seed, ctx, true) {
                    prop_assert!(p.is_consistent(), "{:?}", p);
                }
            }
            for s in build_bio_dataset(&refs, kind, 1000, seed) {
                prop_assert!(s.validate().is_ok());
                prop_assert_eq!(s.labels.iter().filter(|l| **l == minmaxage::crf::BioLabel::B).count(), 1);
            }
        }
    }
}

/// Answers with a hash-chosen integer token and hash-chosen confidence, and
/// counts every answer it gives.
struct HashAnswerer {
    salt: u64,
    produced: AtomicUsize,
}

impl AgeAnswerer for HashAnswerer {
    fn answer(&self, s: &Sentence, kind: AgeKind) -> Option<AgeAnswer> {
        let mut h = DefaultHasher::new();
        (self.salt, &s.text, kind.as_str()).hash(&mut h);
        let bits = h.finish();
        let ints: Vec<_> = s.tokens.iter().filter(|t| parse_integer_token(t).is_some()).collect();
        if ints.is_empty() || bits % 5 == 0 {
            return None;
        }
        let t = ints[(bits >> 8) as usize % ints.len()];
        self.produced.fetch_add(1, Ordering::Relaxed);
        Some(AgeAnswer {
            value: parse_integer_token(t).unwrap(),
            confidence: ((bits >> 32) % 1000) as f64 / 999.0,
            kind,
            sentence_index: s.index,
            span: (t.start, t.end),
        })
    }
}

const POOL: [&str; 10] = [
    EXAMPLE_1,
    EXAMPLE_2,
    EXAMPLE_3,
    EXAMPLE_4,
    EXAMPLE_5,
    EXAMPLE_6,
    EXAMPLE_7_SPECULATIVE,
    "The mean age was 34.2 years.",
    "Participants aged 30 to 65 years took part.",
    "Nothing to see here.",
];

fn doc_strategy() -> impl Strategy<Value = Vec<(usize, usize)>> {
    prop::collection::vec((0usize..POOL.len(), 0usize..4), 0..8)
}

fn build(id: &str, parts: &[(usize, usize)]) -> Document {
    let kinds = [SectionKind::Abstract, SectionKind::Introduction, SectionKind::Method, SectionKind::Result];
    Document::from_sections(id, parts.iter().map(|&(s, k)| (kinds[k], vec![POOL[s]])).collect())
}

proptest! {
    #[test]
    fn pipeline_invariants(parts in doc_strategy(), salt in 0u64..1000) {
        let doc = build("p", &parts);
        let answerer = HashAnswerer { salt, produced: AtomicUsize::new(0) };
        let config = PipelineConfig::default();
        let p = run_pipeline(&doc, None, &answerer, &config);
        if let (Some(lo), Some(hi)) = (&p.min, &p.max) {
            prop_assert!(lo.value < hi.value);
        }
        for a in p.min.iter().chain(p.max.iter()) {
            prop_assert!(a.confidence >= config.threshold);
        }
        let survivors = p.min.is_some() as usize + p.max.is_some() as usize;
        prop_assert_eq!(answerer.produced.load(Ordering::Relaxed), survivors + p.audit.len());
    }

    /// Removing a sentence cannot turn a Null kind into a value, provided
    /// conflict resolution did not intervene.
    #[test]
    fn removal_never_creates_answers(parts in doc_strategy(), salt in 0u64..1000, drop in 0usize..8) {
        prop_assume!(!parts.is_empty());
        let config = PipelineConfig::default();
        let answerer = HashAnswerer { salt, produced: AtomicUsize::new(0) };
        let full = run_pipeline(&build("m", &parts), None, &answerer, &config);
        prop_assume!(full.audit.iter().all(|e| e.stage != Stage::Conflict));
        let mut fewer = parts.clone();
        fewer.remove(drop % parts.len());
        let reduced = run_pipeline(&build("m", &fewer), None, &answerer, &config);
        for kind in AgeKind::BOTH {
            if full.get(kind).is_none() {
                prop_assert!(reduced.get(kind).is_none());
            }
        }
    }
}

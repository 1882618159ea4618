use crate::corpus::{normalize, Shape};
use crate::linear::FeatureVector;

const BOS: &str = "<BOS>";
const EOS: &str = "<EOS>";

/// Offsets of the unigram window and the n-gram templates, relative to the
/// current position.
const UNIGRAMS: [isize; 5] = [-2, -1, 0, 1, 2];
const NGRAMS: [&[isize]; 5] = [&[-1, 0], &[0, 1], &[-2, -1, 0], &[-1, 0, 1], &[0, 1, 2]];

fn offset_name(prefix: &str, off: isize) -> String {
    if off > 0 {
        format!("{prefix}+{off}")
    } else {
        format!("{prefix}{off}")
    }
}

fn at<'a>(seq: &'a [String], i: usize, off: isize) -> &'a str {
    let j = i as isize + off;
    if j < 0 {
        BOS
    } else if j as usize >= seq.len() {
        EOS
    } else {
        &seq[j as usize]
    }
}

fn add_templates(fv: &mut FeatureVector, prefix: &str, seq: &[String], i: usize) {
    for off in UNIGRAMS {
        fv.add(format!("{}:{}", offset_name(prefix, off), at(seq, i, off)), 1.0);
    }
    for gram in NGRAMS {
        let name: Vec<String> = gram.iter().map(|&o| offset_name(prefix, o)).collect();
        let value: Vec<&str> = gram.iter().map(|&o| at(seq, i, o)).collect();
        fv.add(format!("{}:{}", name.join("|"), value.join("|")), 1.0);
    }
}

/// Per-position features: word unigrams at offsets -2..+2, the two word
/// bigrams and three word trigrams around the current position, and the
/// same templates over part-of-speech tags when supplied or word shapes
/// otherwise. Positions outside the sequence read as `<BOS>` / `<EOS>`.
pub fn featurize_sequence<S: AsRef<str>>(tokens: &[S], pos: Option<&[String]>) -> Vec<FeatureVector> {
    let words: Vec<String> = tokens.iter().map(|t| normalize(t.as_ref())).collect();
    let (tag_prefix, tags): (&str, Vec<String>) = match pos {
        Some(p) => ("pos", p.to_vec()),
        None => ("shape", tokens.iter().map(|t| Shape::of(t.as_ref()).as_str().to_string()).collect()),
    };
    (0..words.len())
        .map(|i| {
            let mut fv = FeatureVector::new();
            add_templates(&mut fv, "w", &words, i);
            add_templates(&mut fv, tag_prefix, &tags, i);
            fv
        })
        .collect()
}

//! Rule-based sentence splitter.
//!
//! A boundary is placed after `.`, `!` or `?` (plus any closing brackets or
//! quotes) when the next non-space character is an uppercase letter or a
//! digit. Periods that end a guarded abbreviation or a single capital letter
//! never split, and a period directly followed by a digit (a decimal point)
//! is never a boundary because whitespace is required.

const ABBREVIATIONS: &[&str] = &[
    "e.g", "i.e", "vs", "al", "fig", "figs", "dr", "mr", "mrs", "ms", "prof", "approx", "cf", "no", "vol", "ref",
    "refs", "eq", "st", "jr", "sr", "inc", "ltd", "co", "dept", "univ", "ca",
];

const CLOSERS: &[char] = &[')', ']', '"', '\'', '\u{2019}', '\u{201d}'];

/// Byte spans `(start, end)` of the sentences in `paragraph`, trimmed of
/// surrounding whitespace. Empty paragraphs yield no spans.
pub fn sentence_spans(paragraph: &str) -> Vec<(usize, usize)> {
    let chars: Vec<(usize, char)> = paragraph.char_indices().collect();
    let mut spans = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i < chars.len() {
        let (_, c) = chars[i];
        if matches!(c, '.' | '!' | '?') {
            let mut j = i + 1;
            while j < chars.len() && CLOSERS.contains(&chars[j].1) {
                j += 1;
            }
            let end = chars.get(j).map_or(paragraph.len(), |&(b, _)| b);
            let mut k = j;
            while k < chars.len() && chars[k].1.is_whitespace() {
                k += 1;
            }
            let followed_by_start = k > j && k < chars.len() && {
                let n = chars[k].1;
                n.is_uppercase() || n.is_ascii_digit()
            };
            if followed_by_start && !(c == '.' && guarded(&paragraph[..chars[i].0])) {
                push_trimmed(paragraph, start, end, &mut spans);
                start = chars[k].0;
                i = k;
                continue;
            }
        }
        i += 1;
    }
    push_trimmed(paragraph, start, paragraph.len(), &mut spans);
    spans
}

pub fn split_sentences(paragraph: &str) -> Vec<String> {
    sentence_spans(paragraph)
        .into_iter()
        .map(|(s, e)| paragraph[s..e].to_string())
        .collect()
}

fn push_trimmed(text: &str, start: usize, end: usize, spans: &mut Vec<(usize, usize)>) {
    let slice = &text[start..end];
    let lead = slice.len() - slice.trim_start().len();
    let trimmed = slice.trim();
    if !trimmed.is_empty() {
        spans.push((start + lead, start + lead + trimmed.len()));
    }
}

/// Whether the word ending right before a period is an abbreviation.
fn guarded(before: &str) -> bool {
    let word: String = before
        .chars()
        .rev()
        .take_while(|c| c.is_alphabetic() || *c == '.')
        .collect::<Vec<_>>()
        .into_iter()
        .rev()
        .collect();
    if word.is_empty() {
        return false;
    }
    let mut letters = word.chars();
    if let (Some(first), None) = (letters.next(), letters.next()) {
        if first.is_uppercase() {
            return true;
        }
    }
    let lower = word.to_lowercase();
    ABBREVIATIONS.contains(&lower.as_str())
}

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::sentences::sentence_spans;
use super::tokenize::{tokenize, Token};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SectionKind {
    Abstract,
    Introduction,
    Method,
    Result,
    Discussion,
    Other,
}

impl SectionKind {
    pub const ALL: [SectionKind; 6] = [
        SectionKind::Abstract,
        SectionKind::Introduction,
        SectionKind::Method,
        SectionKind::Result,
        SectionKind::Discussion,
        SectionKind::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SectionKind::Abstract => "abstract",
            SectionKind::Introduction => "introduction",
            SectionKind::Method => "method",
            SectionKind::Result => "result",
            SectionKind::Discussion => "discussion",
            SectionKind::Other => "other",
        }
    }
}

impl fmt::Display for SectionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SectionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SectionKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::input("section", format!("unknown section name {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sentence {
    pub text: String,
    /// Byte offset of the sentence within its paragraph.
    pub offset: usize,
    pub tokens: Vec<Token>,
    pub section: SectionKind,
    /// Ordinal within the whole document.
    pub index: usize,
}

impl Sentence {
    pub fn new(text: &str, section: SectionKind, index: usize) -> Sentence {
        Sentence { text: text.to_string(), offset: 0, tokens: tokenize(text), section, index }
    }

    /// Whether any token is one of the age keywords.
    pub fn has_age_keyword(&self) -> bool {
        self.tokens.iter().any(|t| is_age_keyword(&t.text))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Paragraph {
    pub text: String,
    pub sentences: Vec<Sentence>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub kind: SectionKind,
    pub paragraphs: Vec<Paragraph>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub id: String,
    pub sections: Vec<Section>,
}

pub const AGE_KEYWORDS: [&str; 5] = ["age", "ages", "aged", "year", "years"];

/// Case-insensitive whole-token match against the age keywords.
pub fn is_age_keyword(token: &str) -> bool {
    AGE_KEYWORDS.iter().any(|k| token.eq_ignore_ascii_case(k))
}

impl Document {
    /// Builds a document from already-sectioned paragraph text.
    pub fn from_sections<S: AsRef<str>>(id: &str, sections: Vec<(SectionKind, Vec<S>)>) -> Document {
        let mut index = 0;
        let sections = sections
            .into_iter()
            .map(|(kind, paras)| Section {
                kind,
                paragraphs: paras
                    .iter()
                    .map(|p| {
                        let text = p.as_ref();
                        let sentences = sentence_spans(text)
                            .into_iter()
                            .map(|(s, e)| {
                                let sentence = Sentence {
                                    text: text[s..e].to_string(),
                                    offset: s,
                                    tokens: tokenize(&text[s..e]),
                                    section: kind,
                                    index,
                                };
                                index += 1;
                                sentence
                            })
                            .collect();
                        Paragraph { text: text.to_string(), sentences }
                    })
                    .collect(),
            })
            .collect();
        Document { id: id.to_string(), sections }
    }

    pub fn sentences(&self) -> impl Iterator<Item = &Sentence> {
        self.sections
            .iter()
            .flat_map(|s| s.paragraphs.iter())
            .flat_map(|p| p.sentences.iter())
    }

    pub fn sentence(&self, index: usize) -> Option<&Sentence> {
        self.sentences().find(|s| s.index == index)
    }

    pub fn num_sentences(&self) -> usize {
        self.sentences().count()
    }

    /// Parses one JSON document object, reporting the offending field path on
    /// schema violations.
    pub fn from_json(value: &Value) -> Result<Document> {
        let obj = value
            .as_object()
            .ok_or_else(|| Error::input("document", "expected a JSON object"))?;
        let id = obj
            .get("id")
            .ok_or_else(|| Error::input("id", "missing"))?
            .as_str()
            .ok_or_else(|| Error::input("id", "expected a string"))?;
        let raw_sections = obj
            .get("sections")
            .ok_or_else(|| Error::input("sections", "missing"))?
            .as_array()
            .ok_or_else(|| Error::input("sections", "expected an array"))?;
        let mut sections = Vec::with_capacity(raw_sections.len());
        for (i, sec) in raw_sections.iter().enumerate() {
            let field = |name: &str| format!("sections[{i}].{name}");
            let name = sec
                .get("name")
                .ok_or_else(|| Error::input(field("name"), "missing"))?
                .as_str()
                .ok_or_else(|| Error::input(field("name"), "expected a string"))?;
            let kind: SectionKind = name
                .parse()
                .map_err(|_| Error::input(field("name"), format!("unknown section name {name:?}")))?;
            let paras = sec
                .get("paragraphs")
                .ok_or_else(|| Error::input(field("paragraphs"), "missing"))?
                .as_array()
                .ok_or_else(|| Error::input(field("paragraphs"), "expected an array"))?;
            let mut texts = Vec::with_capacity(paras.len());
            for (j, p) in paras.iter().enumerate() {
                let text = p
                    .as_str()
                    .ok_or_else(|| Error::input(format!("sections[{i}].paragraphs[{j}]"), "expected a string"))?;
                texts.push(text.to_string());
            }
            sections.push((kind, texts));
        }
        Ok(Document::from_sections(id, sections))
    }

    /// Parses plain text with headings on their own line. Paragraphs are
    /// separated by blank lines; text before the first heading, and text
    /// under a heading that matches no section keyword, goes to `other`.
    pub fn from_plain_text(id: &str, text: &str) -> Document {
        let mut sections: Vec<(SectionKind, Vec<String>)> = Vec::new();
        let mut current: Vec<String> = Vec::new();
        let flush = |current: &mut Vec<String>, paras: &mut Vec<String>| {
            if !current.is_empty() {
                paras.push(current.join(" "));
                current.clear();
            }
        };
        for line in text.lines() {
            let trimmed = line.trim();
            if trimmed.is_empty() {
                if sections.is_empty() && !current.is_empty() {
                    sections.push((SectionKind::Other, Vec::new()));
                }
                if let Some((_, paras)) = sections.last_mut() {
                    flush(&mut current, paras);
                }
                continue;
            }
            if let Some(kind) = heading_kind(trimmed) {
                if sections.is_empty() && !current.is_empty() {
                    sections.push((SectionKind::Other, Vec::new()));
                }
                if let Some((_, paras)) = sections.last_mut() {
                    flush(&mut current, paras);
                }
                sections.push((kind, Vec::new()));
                continue;
            }
            current.push(trimmed.to_string());
        }
        if sections.is_empty() && !current.is_empty() {
            sections.push((SectionKind::Other, Vec::new()));
        }
        if let Some((_, paras)) = sections.last_mut() {
            flush(&mut current, paras);
        }
        Document::from_sections(id, sections)
    }
}

const HEADING_KEYWORDS: &[(&str, SectionKind)] = &[
    ("abstract", SectionKind::Abstract),
    ("summary", SectionKind::Abstract),
    ("introduction", SectionKind::Introduction),
    ("background", SectionKind::Introduction),
    ("materials and methods", SectionKind::Method),
    ("methods", SectionKind::Method),
    ("method", SectionKind::Method),
    ("methodology", SectionKind::Method),
    ("participants", SectionKind::Method),
    ("results", SectionKind::Result),
    ("result", SectionKind::Result),
    ("findings", SectionKind::Result),
    ("discussion", SectionKind::Discussion),
    ("conclusions", SectionKind::Discussion),
    ("conclusion", SectionKind::Discussion),
];

const MAX_HEADING_WORDS: usize = 6;

/// Section assigned to a heading line, or `None` if the line is body text.
///
/// Markdown headings (`#`) are always headings and fall back to `other`.
/// Bare lines qualify only when short, free of digits and sentence
/// punctuation, and starting with a section keyword.
pub fn heading_kind(line: &str) -> Option<SectionKind> {
    let markdown = line.starts_with('#');
    let body = line.trim_start_matches('#').trim();
    let body = body
        .trim_start_matches(|c: char| c.is_ascii_digit() || c == '.' || c.is_whitespace())
        .trim_end_matches(':')
        .trim();
    let lower = body.to_lowercase();
    let words: Vec<&str> = lower
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .collect();
    let keyword = HEADING_KEYWORDS
        .iter()
        .filter_map(|(kw, kind)| {
            let kw_words: Vec<&str> = kw.split(' ').collect();
            words
                .windows(kw_words.len())
                .position(|w| w == kw_words.as_slice())
                .map(|pos| (pos, std::cmp::Reverse(kw_words.len()), *kind))
        })
        .min()
        .map(|(pos, _, kind)| (pos, kind));
    if markdown {
        return Some(keyword.map_or(SectionKind::Other, |(_, kind)| kind));
    }
    let sentence_like = body.contains(['.', ',', ';', '?', '!'])
        || body.contains(|c: char| c.is_ascii_digit())
        || words.len() > MAX_HEADING_WORDS
        || words.is_empty();
    if sentence_like {
        None
    } else {
        keyword.filter(|&(pos, _)| pos == 0).map(|(_, kind)| kind)
    }
}

/// Loads documents from file content: one JSON object, line-delimited JSON
/// objects, or plain text (identified by `fallback_id`).
pub fn load_documents(content: &str, fallback_id: &str) -> Result<Vec<Document>> {
    let trimmed = content.trim_start();
    if !trimmed.starts_with('{') {
        return Ok(vec![Document::from_plain_text(fallback_id, content)]);
    }
    if let Ok(value) = serde_json::from_str::<Value>(content) {
        return Ok(vec![Document::from_json(&value)?]);
    }
    let mut docs = Vec::new();
    for (n, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(line)
            .map_err(|e| Error::input(format!("line {}", n + 1), e.to_string()))?;
        docs.push(Document::from_json(&value)?);
    }
    Ok(docs)
}

/// Serialisable form of the document schema.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DocumentRecord {
    pub id: String,
    pub sections: Vec<SectionRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SectionRecord {
    pub name: SectionKind,
    pub paragraphs: Vec<String>,
}

impl From<&Document> for DocumentRecord {
    fn from(doc: &Document) -> Self {
        DocumentRecord {
            id: doc.id.clone(),
            sections: doc
                .sections
                .iter()
                .map(|s| SectionRecord {
                    name: s.kind,
                    paragraphs: s.paragraphs.iter().map(|p| p.text.clone()).collect(),
                })
                .collect(),
        }
    }
}

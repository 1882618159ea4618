//! Document model, section assignment, sentence splitting and tokenization.

mod document;
mod sentences;
mod tokenize;

pub use document::{
    heading_kind, is_age_keyword, load_documents, Document, DocumentRecord, Paragraph, Section, SectionKind,
    SectionRecord, Sentence, AGE_KEYWORDS,
};
pub use sentences::{sentence_spans, split_sentences};
pub use tokenize::{is_comparison, is_dash, normalize, parse_integer_token, tokenize, Shape, Token};

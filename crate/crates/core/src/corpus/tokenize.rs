//! Numeric-robust tokenizer.
//!
//! Digit runs are always split from surrounding letters and punctuation, so
//! "6-12" yields three tokens and both bounds of a range are visible to
//! downstream components. Offsets are byte offsets into the input.

use serde::{Deserialize, Serialize};

/// Word-shape class of a token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Shape {
    AllDigits,
    ContainsDigit,
    Capitalized,
    AllCaps,
    Lower,
    Punct,
    Symbol,
}

impl Shape {
    pub fn as_str(self) -> &'static str {
        match self {
            Shape::AllDigits => "AllDigits",
            Shape::ContainsDigit => "ContainsDigit",
            Shape::Capitalized => "Capitalized",
            Shape::AllCaps => "AllCaps",
            Shape::Lower => "Lower",
            Shape::Punct => "Punct",
            Shape::Symbol => "Symbol",
        }
    }

    /// Shape of an arbitrary token text.
    pub fn of(text: &str) -> Shape {
        if !text.is_empty() && text.bytes().all(|b| b.is_ascii_digit()) {
            return Shape::AllDigits;
        }
        if text.chars().any(char::is_numeric) {
            return Shape::ContainsDigit;
        }
        if is_symbol(text) {
            return Shape::Symbol;
        }
        let mut letters = text.chars().filter(|c| c.is_alphabetic()).peekable();
        if letters.peek().is_none() {
            return Shape::Punct;
        }
        let first_upper = text.chars().next().is_some_and(char::is_uppercase);
        let cased: Vec<char> = text.chars().filter(|c| c.is_alphabetic()).collect();
        if cased.len() > 1 && cased.iter().all(|c| c.is_uppercase()) {
            Shape::AllCaps
        } else if first_upper {
            Shape::Capitalized
        } else {
            Shape::Lower
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
    pub numeric_value: Option<u32>,
    pub shape: Shape,
}

impl Token {
    pub fn new(text: &str, start: usize) -> Token {
        Token {
            text: text.to_string(),
            start,
            end: start + text.len(),
            numeric_value: parse_digit_run(text),
            shape: Shape::of(text),
        }
    }

    /// Lowercased text with dashes and comparison symbols in canonical form.
    pub fn norm(&self) -> String {
        normalize(&self.text)
    }
}

const DASHES: &[char] = &['-', '\u{2010}', '\u{2011}', '\u{2012}', '\u{2013}', '\u{2014}', '\u{2212}'];
const COMPARISONS: &[char] = &['<', '>', '=', '\u{2264}', '\u{2265}'];
const OTHER_SYMBOLS: &[char] = &[
    '+', '\u{00b1}', '\u{00d7}', '\u{00f7}', '~', '^', '%', '$', '\u{20ac}', '\u{00a3}', '&', '*', '/', '\\', '|',
    '@', '#',
];

pub fn is_dash(c: char) -> bool {
    DASHES.contains(&c)
}

fn is_symbol(text: &str) -> bool {
    matches!(text, "<=" | ">=")
        || (text.chars().count() == 1
            && text.chars().all(|c| COMPARISONS.contains(&c) || OTHER_SYMBOLS.contains(&c)))
}

/// True for the comparison operators recognised as `Symbol` tokens.
pub fn is_comparison(text: &str) -> bool {
    matches!(text, "<" | ">" | "=" | "<=" | ">=" | "\u{2264}" | "\u{2265}")
}

/// Canonical lowercase form used by every feature extractor.
pub fn normalize(text: &str) -> String {
    match text {
        "\u{2264}" => "<=".to_string(),
        "\u{2265}" => ">=".to_string(),
        t if t.chars().count() == 1 && t.chars().all(is_dash) => "-".to_string(),
        t => t.to_lowercase(),
    }
}

fn parse_digit_run(text: &str) -> Option<u32> {
    if text.is_empty() || !text.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    text.parse().ok()
}

/// Integer value of a token that is a plain digit run; decimals, words and
/// spelled-out numbers yield `None`.
pub fn parse_integer_token(tok: &Token) -> Option<u32> {
    if tok.shape == Shape::AllDigits {
        tok.numeric_value
    } else {
        None
    }
}

pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(start, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        let mut end = start + c.len_utf8();
        chars.next();
        if c.is_ascii_digit() {
            while let Some(&(i, d)) = chars.peek() {
                if !d.is_ascii_digit() {
                    break;
                }
                end = i + d.len_utf8();
                chars.next();
            }
        } else if c.is_alphabetic() {
            while let Some(&(i, d)) = chars.peek() {
                if !d.is_alphabetic() {
                    break;
                }
                end = i + d.len_utf8();
                chars.next();
            }
        } else if c == '<' || c == '>' {
            if let Some(&(i, '=')) = chars.peek() {
                end = i + 1;
                chars.next();
            }
        }
        tokens.push(Token::new(&text[start..end], start));
    }
    tokens
}

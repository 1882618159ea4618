//! Reference texts used by tests, examples and the synthetic corpus.

/// A registry eligibility-criteria field in the usual bulleted layout.
pub const NSCLC_CRITERIA: &str = "Inclusion Criteria:\n\n  - Women and men at least 21 years of age with suspected NSCLC to be\n    confirmed after surgery.\n  - Planned lobectomy or pneumonectomy.\n  - Signed informed consent.\n\nExclusion Criteria:\n\n  - Previous chemotherapy within 5 years.\n  - Pregnancy.";

/// The clause of [`NSCLC_CRITERIA`] that carries its minimum age of 21.
pub const NSCLC_CLAUSE: &str = "Women and men at least 21 years of age with suspected NSCLC to be confirmed after surgery.";

/// Factual: min 18, max 23.
pub const EXAMPLE_1: &str = "Participants were 83 smokers, who were 18-23 years old and undergraduate students.";
/// Factual: min 18, max 24.
pub const EXAMPLE_2: &str = "Participants aged 18-24 years were randomized to a brief office intervention (n=99) or to an expressive writing plus brief office intervention (n=97).";
/// Speculative: eligibility range 18 to 60.
pub const EXAMPLE_3: &str = "To be included in the study, smokers had to be between the ages of 18 and 60 years.";
/// Speculative: eligibility minimum 18.
pub const EXAMPLE_4: &str = "The subjects were eligible for inclusion if they were at least 18 years of age, reported smoking 10 or more cigarettes per day.";
/// Unrelated population: 18 to 24.
pub const EXAMPLE_5: &str = "An estimated 23.6% of young adults aged 18-24 years are current smokers.";
/// Unrelated population: 11 to 12.
pub const EXAMPLE_6: &str = "Smoking Dutch youths had in many cases tried their first cigarette at the age of 11-12 years.";
/// Speculative with the cue outside the clause holding the age.
pub const EXAMPLE_7_SPECULATIVE: &str = "Eligibility for this study included being a student (full or part time), smoking at least 1 cigarette/day in each of the past 7 days, being aged 18-24 years, and being interested in quitting smoking in the next 6 months.";
/// Factual counterpart of [`EXAMPLE_7_SPECULATIVE`]: max 23.
pub const EXAMPLE_7_FACTUAL: &str = "Participants were 83 smokers, who were 18-23 years old and undergraduate students at a university.";

/// Gold answers for the example sentences, as (text, min, max).
pub const EXAMPLE_ANSWERS: [(&str, Option<u32>, Option<u32>); 8] = [
    (EXAMPLE_1, Some(18), Some(23)),
    (EXAMPLE_2, Some(18), Some(24)),
    (EXAMPLE_3, Some(18), Some(60)),
    (EXAMPLE_4, Some(18), None),
    (EXAMPLE_5, Some(18), Some(24)),
    (EXAMPLE_6, Some(11), Some(12)),
    (EXAMPLE_7_SPECULATIVE, Some(18), Some(24)),
    (EXAMPLE_7_FACTUAL, Some(18), Some(23)),
];

/// An answerer that looks sentences up in a fixed table and answers with the
/// first token spelling the listed value.
#[derive(Debug, Clone, Default)]
pub struct ScriptedAnswerer {
    pub entries: Vec<ScriptEntry>,
}

#[derive(Debug, Clone)]
pub struct ScriptEntry {
    pub text: String,
    pub kind: crate::AgeKind,
    pub value: u32,
    pub confidence: f64,
}

impl ScriptedAnswerer {
    /// Every example sentence answered with its gold values at the given
    /// confidence.
    pub fn examples(confidence: f64) -> ScriptedAnswerer {
        let mut entries = Vec::new();
        for (text, min, max) in EXAMPLE_ANSWERS {
            for (kind, value) in [(crate::AgeKind::Min, min), (crate::AgeKind::Max, max)] {
                if let Some(value) = value {
                    entries.push(ScriptEntry { text: text.to_string(), kind, value, confidence });
                }
            }
        }
        ScriptedAnswerer { entries }
    }
}

impl crate::qa::AgeAnswerer for ScriptedAnswerer {
    fn answer(&self, s: &crate::corpus::Sentence, kind: crate::AgeKind) -> Option<crate::AgeAnswer> {
        let e = self.entries.iter().find(|e| e.kind == kind && e.text == s.text)?;
        let digits = e.value.to_string();
        let tok = s.tokens.iter().find(|t| t.text == digits)?;
        Some(crate::AgeAnswer {
            value: e.value,
            confidence: e.confidence,
            kind,
            sentence_index: s.index,
            span: (tok.start, tok.end),
        })
    }
}

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Which bound of the participant age range a question or answer refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgeKind {
    Min,
    Max,
}

impl AgeKind {
    pub const BOTH: [AgeKind; 2] = [AgeKind::Min, AgeKind::Max];

    pub fn as_str(self) -> &'static str {
        match self {
            AgeKind::Min => "min",
            AgeKind::Max => "max",
        }
    }
}

impl fmt::Display for AgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AgeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "min" => Ok(AgeKind::Min),
            "max" => Ok(AgeKind::Max),
            other => Err(Error::input("kind", format!("expected `min` or `max`, found {other:?}"))),
        }
    }
}

/// An extracted age value with its confidence and evidence location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgeAnswer {
    /// Age in years.
    pub value: u32,
    /// In `[0, 1]`.
    pub confidence: f64,
    pub kind: AgeKind,
    pub sentence_index: usize,
    /// Byte span of the answer token within the sentence text.
    pub span: (usize, usize),
}

//! Extraction of factual minimum/maximum participant ages from clinical trial
//! articles, trained by distant supervision from clinical study registry
//! records.

pub mod age;
pub mod corpus;
pub mod crf;
mod error;
pub mod eval;
pub mod fixtures;
pub mod linear;
pub mod modelfile;
pub mod optim;
pub mod passage;
pub mod pipeline;
pub mod qa;
pub mod sentfinder;
pub mod supervision;
pub mod synth;
pub mod workflow;

pub use age::{AgeAnswer, AgeKind};
pub use error::{Error, Result};

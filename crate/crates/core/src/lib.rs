//! Bootstrapping morphological inflection data from a handful of seed
//! tables and a word embedding space.

pub mod editscript;
pub mod embedding;
pub mod error;
pub mod evaluation;
pub mod inflector;
pub mod pairing;
pub mod pipeline;
pub mod seedio;
pub mod synth;
pub mod tagging;

pub use error::{Error, Result};

//! Trainable text-processing pipeline: tokenization, tagging, dependency
//! parsing, lemmatization and named entity recognition.

pub mod bilou;
pub mod conllu;
pub mod doc;
pub mod error;
pub mod eval;
pub mod lemmatizer;
pub mod ner;
pub mod ner_tsv;
pub mod neural;
pub mod parser;
pub mod pipeline;
pub mod syntax;
pub mod tagger;
pub mod tokenizer;

pub use doc::{AnnotatedDoc, EntitySpan, Head, MorphFeats, Token};
pub use error::{Error, Result};

//! The assembled pipeline: tokenizer, shared encoder with tagger and parser,
//! lemmatizer and entity recognizer.

mod bench;
mod bundle;
mod config;
mod train;

pub use bench::{benchmark, peak_rss_bytes, BenchReport};
pub use bundle::{decode_blob, encode_blob, FORMAT_VERSION, MAGIC};
pub use config::{Components, LemmatizerConfig, Paths, PipelineConfig};
pub use train::{train_pipeline, TrainReport};

use crate::doc::AnnotatedDoc;
use crate::lemmatizer::Lemmatizer;
use crate::ner::NerModel;
use crate::syntax::{strip_annotations, SyntaxModel};
use crate::tokenizer::{tokenize, TokenizerRules};

#[derive(Clone, Debug)]
pub struct Pipeline {
    pub rules: TokenizerRules,
    pub syntax: SyntaxModel,
    pub lemmatizer: Option<Lemmatizer>,
    pub ner: Option<NerModel>,
    pub seed: u64,
    /// TOML of the configuration the model was trained with.
    pub config_snapshot: String,
}

impl Pipeline {
    pub fn tokenize(&self, text: &str) -> AnnotatedDoc {
        tokenize(text, &self.rules)
    }

    /// Tokenizes and annotates raw text.
    pub fn annotate_text(&self, text: &str) -> AnnotatedDoc {
        let mut doc = self.tokenize(text);
        self.annotate_tokens(&mut doc);
        doc
    }

    /// Re-annotates a tokenized document, discarding all existing layers
    /// except token texts and whitespace.
    pub fn annotate_doc(&self, doc: &AnnotatedDoc) -> AnnotatedDoc {
        let mut out = strip_annotations(std::slice::from_ref(doc)).remove(0);
        self.annotate_tokens(&mut out);
        out
    }

    fn annotate_tokens(&self, doc: &mut AnnotatedDoc) {
        if doc.is_empty() {
            return;
        }
        self.syntax.annotate(doc);
        if let Some(lemmatizer) = &self.lemmatizer {
            lemmatizer.apply(doc);
        }
        if let Some(ner) = &self.ner {
            ner.recognize(doc);
        }
    }

    /// Names of the trained components in stage order.
    pub fn components(&self) -> Vec<&'static str> {
        let mut out = vec!["tokenizer", "tagger"];
        if self.syntax.parser.is_some() {
            out.push("parser");
        }
        if self.lemmatizer.is_some() {
            out.push("lemmatizer");
        }
        if self.ner.is_some() {
            out.push("ner");
        }
        out
    }
}

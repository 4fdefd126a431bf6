//! Part-of-speech, morphological feature and sentence-start prediction.

use std::collections::BTreeSet;

use ndarray::Array2;

use crate::doc::{AnnotatedDoc, MorphFeats};
use crate::error::{Error, Result};
use crate::neural::{HasParams, Param, SoftmaxHead};

pub const SENT_LABELS: [&str; 2] = ["no", "yes"];

/// The three tagging heads over a shared encoder.
#[derive(Clone, Debug)]
pub struct Tagger {
    pub upos: SoftmaxHead,
    pub feats: SoftmaxHead,
    pub sent: SoftmaxHead,
}

/// Gold label indices per head; `None` where the gold value is absent or
/// unknown to the inventory.
pub struct TagTargets {
    pub upos: Vec<Option<usize>>,
    pub feats: Vec<Option<usize>>,
    pub sent: Vec<Option<usize>>,
}

impl TagTargets {
    pub fn counts(&self) -> [usize; 3] {
        let n = |v: &[Option<usize>]| v.iter().flatten().count();
        [n(&self.upos), n(&self.feats), n(&self.sent)]
    }
}

fn feats_label(feats: &MorphFeats) -> String {
    feats.to_string()
}

impl Tagger {
    /// Builds sorted label inventories from every gold value in `docs`.
    pub fn from_docs<'a>(docs: impl IntoIterator<Item = &'a AnnotatedDoc>, width: usize) -> Result<Self> {
        let mut upos = BTreeSet::new();
        let mut feats = BTreeSet::new();
        for doc in docs {
            for token in &doc.tokens {
                if let Some(u) = &token.upos {
                    upos.insert(u.clone());
                }
                if let Some(f) = &token.feats {
                    feats.insert(feats_label(f));
                }
            }
        }
        if upos.is_empty() {
            return Err(Error::Contract("training data has no part-of-speech tags".to_owned()));
        }
        if feats.is_empty() {
            feats.insert("_".to_owned());
        }
        Ok(Tagger::with_labels(
            upos.into_iter().collect(),
            feats.into_iter().collect(),
            width,
        ))
    }

    pub fn with_labels(upos: Vec<String>, feats: Vec<String>, width: usize) -> Self {
        Tagger {
            upos: SoftmaxHead::new("tagger.upos", width, upos),
            feats: SoftmaxHead::new("tagger.feats", width, feats),
            sent: SoftmaxHead::new(
                "tagger.sent",
                width,
                SENT_LABELS.iter().map(|s| s.to_string()).collect(),
            ),
        }
    }

    pub fn targets(&self, doc: &AnnotatedDoc) -> TagTargets {
        let find = |head: &SoftmaxHead, label: Option<String>| label.and_then(|l| head.index_of(&l));
        TagTargets {
            upos: doc
                .tokens
                .iter()
                .map(|t| find(&self.upos, t.upos.clone()))
                .collect(),
            feats: doc
                .tokens
                .iter()
                .map(|t| find(&self.feats, t.feats.as_ref().map(feats_label)))
                .collect(),
            sent: doc
                .tokens
                .iter()
                .map(|t| t.is_sent_start.map(usize::from))
                .collect(),
        }
    }

    /// Loss of the three heads, each scaled by its entry in `scales`.
    /// Returns the loss and its gradient for the encoder output.
    pub fn loss(&mut self, h: &Array2<f64>, targets: &TagTargets, scales: [f64; 3]) -> (f64, Array2<f64>) {
        let (l1, mut dh) = self.upos.loss(h, &targets.upos, scales[0]);
        let (l2, d2) = self.feats.loss(h, &targets.feats, scales[1]);
        let (l3, d3) = self.sent.loss(h, &targets.sent, scales[2]);
        dh += &d2;
        dh += &d3;
        (l1 + l2 + l3, dh)
    }

    /// Sets UPOS, FEATS and sentence starts from encoder rows `h`.
    pub fn apply(&self, doc: &mut AnnotatedDoc, h: &Array2<f64>) {
        let upos = self.upos.predict(h);
        let feats = self.feats.predict(h);
        let sent = self.sent.predict(h);
        for (i, token) in doc.tokens.iter_mut().enumerate() {
            token.upos = Some(self.upos.labels()[upos[i]].clone());
            token.feats = Some(
                self.feats.labels()[feats[i]]
                    .parse()
                    .unwrap_or_default(),
            );
            token.is_sent_start = Some(i == 0 || sent[i] == 1);
        }
    }
}

impl HasParams for Tagger {
    fn params(&self) -> Vec<&Param> {
        let mut out = self.upos.params();
        out.extend(self.feats.params());
        out.extend(self.sent.params());
        out
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut out = self.upos.params_mut();
        out.extend(self.feats.params_mut());
        out.extend(self.sent.params_mut());
        out
    }
}

/// Trains a fresh encoder with the tagging heads, keeping the epoch with the
/// best development UPOS accuracy.
pub fn train_tagger(
    train: &[AnnotatedDoc],
    dev: &[AnnotatedDoc],
    encoder: crate::neural::EncoderConfig,
    vectors: std::sync::Arc<crate::neural::StaticVectors>,
    config: &crate::neural::TrainConfig,
) -> Result<(crate::syntax::SyntaxModel, crate::syntax::TrainLog)> {
    let mut model = crate::syntax::SyntaxModel::new(encoder, vectors, train, config.seed)?;
    let log = crate::syntax::train_syntax(&mut model, train, dev, config)?;
    Ok((model, log))
}

/// Tags `doc` in place; token 0 always starts a sentence.
pub fn tag(doc: &mut AnnotatedDoc, tok2vec: &crate::neural::Tok2Vec, tagger: &Tagger) {
    if doc.is_empty() {
        return;
    }
    let texts: Vec<&str> = doc.tokens.iter().map(|t| t.text.as_str()).collect();
    tagger.apply(doc, &tok2vec.predict(&texts));
}

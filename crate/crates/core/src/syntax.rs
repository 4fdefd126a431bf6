//! The shared-encoder model for tagging and parsing, and its training loop.

use std::sync::Arc;

use log::{info, warn};
use ndarray::s;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::doc::AnnotatedDoc;
use crate::error::{Error, Result};
use crate::eval::evaluate;
use crate::neural::{Adam, EncoderConfig, HasParams, Param, StaticVectors, Tok2Vec, TrainConfig};
use crate::parser::{gold_tree, oracle_examples, parse_doc, ParserExample, ParserModel};
use crate::tagger::{TagTargets, Tagger};

/// RNG stream used for initialization; training draws from stream 1.
pub(crate) fn init_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub(crate) fn train_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

#[derive(Clone, Debug)]
pub struct SyntaxModel {
    pub tok2vec: Tok2Vec,
    pub tagger: Tagger,
    pub parser: Option<ParserModel>,
}

impl SyntaxModel {
    /// A fresh encoder and tagger whose inventories cover `docs`.
    pub fn new<'a>(
        encoder: EncoderConfig,
        vectors: Arc<StaticVectors>,
        docs: impl IntoIterator<Item = &'a AnnotatedDoc>,
        seed: u64,
    ) -> Result<Self> {
        let mut rng = init_rng(seed);
        let tok2vec = Tok2Vec::new(encoder, vectors, &mut rng)?;
        let tagger = Tagger::from_docs(docs, tok2vec.width())?;
        Ok(SyntaxModel {
            tok2vec,
            tagger,
            parser: None,
        })
    }

    /// Adds a parser whose relation inventory covers `docs`.
    pub fn add_parser<'a>(&mut self, docs: impl IntoIterator<Item = &'a AnnotatedDoc>, seed: u64) -> Result<()> {
        let mut labels: Vec<String> = docs
            .into_iter()
            .flat_map(|d| d.tokens.iter().filter_map(|t| t.deprel.clone()))
            .collect();
        labels.sort();
        labels.dedup();
        if labels.is_empty() {
            return Err(Error::Contract("training data has no dependency relations".to_owned()));
        }
        let mut rng = init_rng(seed);
        rng.set_stream(2);
        let w = self.tok2vec.width();
        let pieces = self.tok2vec.config().pieces;
        self.parser = Some(ParserModel::new(labels, w, w, pieces, &mut rng));
        Ok(())
    }

    /// Tags, splits and (with a parser) parses a tokenized document.
    pub fn annotate(&self, doc: &mut AnnotatedDoc) {
        if doc.is_empty() {
            return;
        }
        let texts: Vec<&str> = doc.tokens.iter().map(|t| t.text.as_str()).collect();
        let h = self.tok2vec.predict(&texts);
        self.tagger.apply(doc, &h);
        if let Some(parser) = &self.parser {
            parse_doc(doc, &h, parser);
        }
    }
}

impl HasParams for SyntaxModel {
    fn params(&self) -> Vec<&Param> {
        let mut out = self.tok2vec.params();
        out.extend(self.tagger.params());
        if let Some(p) = &self.parser {
            out.extend(p.params());
        }
        out
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut out = self.tok2vec.params_mut();
        out.extend(self.tagger.params_mut());
        if let Some(p) = &mut self.parser {
            out.extend(p.params_mut());
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub dev_upos: f64,
    pub dev_uas: Option<f64>,
    /// The model selection score.
    pub dev_score: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainLog {
    pub epochs: Vec<EpochRecord>,
    /// 1-based epoch whose model was kept.
    pub best_epoch: usize,
    /// Training sentences without a usable oracle sequence.
    pub skipped_sentences: usize,
}

struct Segment {
    texts: Vec<String>,
    targets: TagTargets,
    /// Sentence token ranges within the segment with their oracle examples.
    parses: Vec<(std::ops::Range<usize>, Vec<ParserExample>)>,
}

/// Splits documents into runs of at most `k` sentences.
pub fn segments(docs: &[AnnotatedDoc], k: usize) -> Vec<AnnotatedDoc> {
    let k = k.max(1);
    let mut out = Vec::new();
    for doc in docs {
        let sentences = doc.sentences();
        for chunk in sentences.chunks(k) {
            out.push(doc.slice(chunk[0].start..chunk[chunk.len() - 1].end));
        }
    }
    out
}

/// Training segments, each encoded together with the neighbouring tokens
/// inside the encoder's receptive field so its vectors match those seen at
/// prediction time. Context tokens carry no targets.
fn prepare(model: &SyntaxModel, docs: &[AnnotatedDoc], k: usize, skipped: &mut usize) -> Vec<Segment> {
    let context = model.tok2vec.config().depth;
    let k = k.max(1);
    let mut out = Vec::new();
    for doc in docs {
        let sentences = doc.sentences();
        for chunk in sentences.chunks(k) {
            let range = chunk[0].start..chunk[chunk.len() - 1].end;
            let lo = range.start.saturating_sub(context);
            let hi = (range.end + context).min(doc.len());
            let (before, after) = (range.start - lo, hi - range.end);
            let seg = doc.slice(range);
            let mut parses = Vec::new();
            if let Some(parser) = &model.parser {
                for sent in seg.sentences() {
                    let examples = gold_tree(&seg, sent.clone(), parser)
                        .and_then(|(h, l)| oracle_examples(&h, &l, parser.labels().len()));
                    match examples {
                        Ok(ex) => parses.push((sent.start + before..sent.end + before, ex)),
                        Err(_) => *skipped += 1,
                    }
                }
            }
            let pad = |v: Vec<Option<usize>>| {
                let mut out = vec![None; before];
                out.extend(v);
                out.extend(std::iter::repeat_n(None, after));
                out
            };
            let t = model.tagger.targets(&seg);
            out.push(Segment {
                texts: doc.tokens[lo..hi].iter().map(|t| t.text.clone()).collect(),
                targets: TagTargets {
                    upos: pad(t.upos),
                    feats: pad(t.feats),
                    sent: pad(t.sent),
                },
                parses,
            });
        }
    }
    out
}

/// Copy of `docs` with every predicted field cleared.
pub fn strip_annotations(docs: &[AnnotatedDoc]) -> Vec<AnnotatedDoc> {
    docs.iter()
        .map(|d| {
            let mut d = d.clone();
            for (i, t) in d.tokens.iter_mut().enumerate() {
                t.upos = None;
                t.feats = None;
                t.lemma = None;
                t.head = None;
                t.deprel = None;
                t.ent = None;
                t.is_sent_start = Some(i == 0);
            }
            d
        })
        .collect()
}

fn dev_scores(model: &SyntaxModel, dev: &[AnnotatedDoc]) -> Result<(f64, Option<f64>)> {
    let mut sys = strip_annotations(dev);
    for doc in &mut sys {
        model.annotate(doc);
    }
    let report = evaluate(dev, &sys)?;
    let uas = model.parser.as_ref().map(|_| report.uas.f1());
    Ok((report.upos.f1(), uas))
}

/// Trains all parameters of `model` on `train`, keeping the epoch with the
/// best development score: UPOS accuracy, averaged with UAS when the model
/// has a parser. Without development data the training data is scored.
pub fn train_syntax(
    model: &mut SyntaxModel,
    train: &[AnnotatedDoc],
    dev: &[AnnotatedDoc],
    config: &TrainConfig,
) -> Result<TrainLog> {
    if train.iter().all(|d| d.is_empty()) {
        return Err(Error::Contract("training set is empty".to_owned()));
    }
    let dev = if dev.is_empty() { train } else { dev };
    let mut log = TrainLog::default();
    let data = prepare(model, train, config.segment_sentences, &mut log.skipped_sentences);
    if log.skipped_sentences > 0 {
        warn!("{} training sentences have no oracle sequence and are not parsed", log.skipped_sentences);
    }
    let mut rng = train_rng(config.seed);
    let mut adam = Adam::new(config);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut best: Option<(f64, SyntaxModel)> = None;

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut batches = 0;
        for batch in order.chunks(config.batch_size.max(1)) {
            let loss = train_batch(model, &data, batch, config.dropout, &mut rng);
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!(
                    "loss is {} in epoch {} after {} updates",
                    loss, epoch, batches
                )));
            }
            adam.step(&mut model.params_mut());
            if !model.all_finite() {
                return Err(Error::NonFinite(format!(
                    "parameters diverged in epoch {} after {} updates",
                    epoch,
                    batches + 1
                )));
            }
            epoch_loss += loss;
            batches += 1;
        }
        let (dev_upos, dev_uas) = dev_scores(model, dev)?;
        let dev_score = dev_uas.map_or(dev_upos, |uas| (dev_upos + uas) / 2.0);
        info!(
            "epoch {:>3}  loss {:.4}  dev UPOS {:.4}{}",
            epoch,
            epoch_loss / batches.max(1) as f64,
            dev_upos,
            dev_uas.map_or(String::new(), |u| format!("  dev UAS {:.4}", u))
        );
        log.epochs.push(EpochRecord {
            epoch,
            loss: epoch_loss / batches.max(1) as f64,
            dev_upos,
            dev_uas,
            dev_score,
        });
        if best.as_ref().is_none_or(|(score, _)| dev_score >= *score) {
            best = Some((dev_score, model.clone()));
            log.best_epoch = epoch;
        }
    }
    if let Some((_, m)) = best {
        *model = m;
    }
    model.round_to_f32();
    Ok(log)
}

/// One forward and backward pass over a batch. The loss is the mean over
/// active heads of each head's mean per-item cross-entropy.
fn train_batch(
    model: &mut SyntaxModel,
    data: &[Segment],
    batch: &[usize],
    dropout: f64,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let mut counts = [0usize; 4];
    for &i in batch {
        let c = data[i].targets.counts();
        for k in 0..3 {
            counts[k] += c[k];
        }
        counts[3] += data[i].parses.iter().map(|(_, e)| e.len()).sum::<usize>();
    }
    let active = counts.iter().filter(|&&c| c > 0).count().max(1) as f64;
    let scale = counts.map(|c| if c > 0 { 1.0 / (c as f64 * active) } else { 0.0 });

    let mut total = 0.0;
    for &i in batch {
        let seg = &data[i];
        if seg.texts.is_empty() {
            continue;
        }
        let (h, cache) = model.tok2vec.forward(&seg.texts, dropout, rng);
        let (loss, mut dh) = model
            .tagger
            .loss(&h, &seg.targets, [scale[0], scale[1], scale[2]]);
        total += loss;
        if let Some(parser) = &mut model.parser {
            for (range, examples) in &seg.parses {
                let (loss, d) = parser.loss(&h.slice(s![range.clone(), ..]), examples, scale[3]);
                total += loss;
                let mut rows = dh.slice_mut(s![range.clone(), ..]);
                rows += &d;
            }
        }
        model.tok2vec.backward(&cache, dh);
    }
    total
}

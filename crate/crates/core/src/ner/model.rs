use std::collections::BTreeSet;
use std::ops::Range;

use log::{info, warn};
use ndarray::{s, Array2};
use rand::seq::SliceRandom;

use crate::bilou::{spans_to_bilou, transition_allowed, BilouTag};
use crate::doc::{AnnotatedDoc, EntitySpan};
use crate::error::{Error, Result};
use crate::eval::evaluate_ner;
use crate::neural::{argmax, softmax_xent, sum_rows, Adam, HasParams, Param, Tok2Vec, TrainConfig};
use crate::syntax::{init_rng, train_rng};

/// Width of the previous-tag embedding.
pub const PREV_TAG_WIDTH: usize = 16;

/// Greedy BILOU tagger. Each decision sees the token's encoder vector, the
/// previous tag and the mean encoder vector of the last entity completed in
/// the sentence.
#[derive(Clone, Debug)]
pub struct NerModel {
    pub tok2vec: Tok2Vec,
    classes: Vec<String>,
    tags: Vec<BilouTag>,
    /// One row per tag plus a final row for the sentence start.
    pub prev_tag: Param,
    pub no_entity: Param,
    pub out_w: Param,
    pub out_b: Param,
}

/// Decoder state carried from one token to the next.
#[derive(Clone, Debug)]
enum Summary {
    None,
    Entity(Range<usize>),
}

impl NerModel {
    /// A model over the sorted entity `classes`, taking ownership of an
    /// encoder (fresh or copied from another component).
    pub fn new(tok2vec: Tok2Vec, classes: Vec<String>, seed: u64) -> Self {
        let mut rng = init_rng(seed);
        rng.set_stream(3);
        let mut tags = vec![BilouTag::Outside];
        for c in &classes {
            tags.push(BilouTag::Begin(c.clone()));
            tags.push(BilouTag::Inside(c.clone()));
            tags.push(BilouTag::Last(c.clone()));
            tags.push(BilouTag::Unit(c.clone()));
        }
        let w = tok2vec.width();
        let t = tags.len();
        NerModel {
            prev_tag: Param::uniform("ner.prev_tag", t + 1, PREV_TAG_WIDTH, 0.1, &mut rng),
            no_entity: Param::uniform("ner.no_entity", 1, w, 0.1, &mut rng),
            out_w: Param::zeros("ner.out.w", 2 * w + PREV_TAG_WIDTH, t),
            out_b: Param::zeros("ner.out.b", 1, t),
            tok2vec,
            classes,
            tags,
        }
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn tags(&self) -> &[BilouTag] {
        &self.tags
    }

    fn tag_index(&self, tag: &BilouTag) -> Option<usize> {
        self.tags.iter().position(|t| t == tag)
    }

    fn start_row(&self) -> usize {
        self.tags.len()
    }

    /// Tags allowed after `prev`; open tags are excluded on a sentence's
    /// last token.
    fn allowed(&self, prev: Option<usize>, last: bool) -> Vec<bool> {
        let prev = prev.map(|p| &self.tags[p]);
        self.tags
            .iter()
            .map(|t| transition_allowed(prev, t) && !(last && t.is_open()))
            .collect()
    }

    fn input_row(&self, h: &Array2<f64>, i: usize, prev: Option<usize>, summary: &Summary) -> Vec<f64> {
        let w = self.tok2vec.width();
        let mut x = Vec::with_capacity(2 * w + PREV_TAG_WIDTH);
        x.extend(h.row(i).iter());
        x.extend(self.prev_tag.value.row(prev.unwrap_or(self.start_row())).iter());
        match summary {
            Summary::None => x.extend(self.no_entity.value.row(0).iter()),
            Summary::Entity(r) => {
                let mean = h.slice(s![r.clone(), ..]).mean_axis(ndarray::Axis(0)).expect("non-empty entity");
                x.extend(mean.iter());
            }
        }
        x
    }

    /// Predicts BILOU tags for one sentence from its encoder rows.
    fn decode(&self, h: &Array2<f64>, range: Range<usize>) -> Vec<BilouTag> {
        let mut prev = None;
        let mut summary = Summary::None;
        let mut start = range.start;
        let mut out = Vec::with_capacity(range.len());
        for i in range.clone() {
            let x = self.input_row(h, i, prev, &summary);
            let x = ndarray::ArrayView1::from(&x);
            let mut logits = x.dot(&self.out_w.value);
            logits += &self.out_b.value.row(0);
            let allowed = self.allowed(prev, i + 1 == range.end);
            let best = argmax(logits.as_slice().expect("contiguous"), |k| allowed[k])
                .expect("O is always allowed");
            let tag = &self.tags[best];
            if matches!(tag, BilouTag::Begin(_) | BilouTag::Unit(_)) {
                start = i;
            }
            if tag.completes_entity() {
                summary = Summary::Entity(start..i + 1);
            }
            out.push(tag.clone());
            prev = Some(best);
        }
        out
    }

    /// Sets the entity tag of every token, sentence by sentence.
    pub fn recognize(&self, doc: &mut AnnotatedDoc) -> Vec<EntitySpan> {
        if doc.is_empty() {
            return Vec::new();
        }
        let texts: Vec<&str> = doc.tokens.iter().map(|t| t.text.as_str()).collect();
        let h = self.tok2vec.predict(&texts);
        for range in doc.sentences() {
            let tags = self.decode(&h, range.clone());
            for (token, tag) in doc.tokens[range].iter_mut().zip(tags) {
                token.ent = Some(tag);
            }
        }
        doc.entities()
    }

    /// Teacher-forced loss over one sentence-aligned segment whose gold tag
    /// indices are `gold` (in `sentences`), scaled by `scale`. Returns the
    /// loss and the gradient for the encoder rows.
    fn loss(&mut self, h: &Array2<f64>, sentences: &[(Range<usize>, Vec<usize>)], scale: f64) -> (f64, Array2<f64>) {
        let w = self.tok2vec.width();
        let mut rows = Vec::new();
        let mut prevs = Vec::new();
        let mut summaries = Vec::new();
        let mut targets = Vec::new();
        let mut masks = Vec::new();
        for (range, gold) in sentences {
            let mut prev = None;
            let mut summary = Summary::None;
            let mut start = range.start;
            for (k, i) in range.clone().enumerate() {
                rows.push(self.input_row(h, i, prev, &summary));
                masks.push(self.allowed(prev, i + 1 == range.end));
                prevs.push(prev);
                summaries.push(summary.clone());
                targets.push(Some(gold[k]));
                let tag = &self.tags[gold[k]];
                if matches!(tag, BilouTag::Begin(_) | BilouTag::Unit(_)) {
                    start = i;
                }
                if tag.completes_entity() {
                    summary = Summary::Entity(start..i + 1);
                }
                prev = Some(gold[k]);
            }
        }
        let mut dh = Array2::zeros(h.raw_dim());
        if rows.is_empty() {
            return (0.0, dh);
        }
        let cols = rows[0].len();
        let x = Array2::from_shape_vec((rows.len(), cols), rows.concat()).expect("uniform rows");
        let mut logits = x.dot(&self.out_w.value);
        logits += &self.out_b.value;
        let (loss, mut d) = softmax_xent(&logits, &targets, Some(&masks));
        d *= scale;
        self.out_w.grad += &x.t().dot(&d);
        self.out_b.grad += &sum_rows(&d);
        let dx = d.dot(&self.out_w.value.t());

        let positions = sentences.iter().flat_map(|(r, _)| r.clone());
        for (row, i) in positions.enumerate() {
            let mut target = dh.row_mut(i);
            target += &dx.slice(s![row, ..w]);
            let p = prevs[row].unwrap_or(self.start_row());
            let mut g = self.prev_tag.grad.row_mut(p);
            g += &dx.slice(s![row, w..w + PREV_TAG_WIDTH]);
            let ds = dx.slice(s![row, w + PREV_TAG_WIDTH..]);
            match &summaries[row] {
                Summary::None => {
                    let mut g = self.no_entity.grad.row_mut(0);
                    g += &ds;
                }
                Summary::Entity(r) => {
                    let share = &ds / r.len() as f64;
                    for j in r.clone() {
                        let mut g = dh.row_mut(j);
                        g += &share;
                    }
                }
            }
        }
        (loss * scale, dh)
    }

    fn own_params(&self) -> Vec<&Param> {
        vec![&self.prev_tag, &self.no_entity, &self.out_w, &self.out_b]
    }
}

impl HasParams for NerModel {
    fn params(&self) -> Vec<&Param> {
        let mut out = self.tok2vec.params();
        out.extend(self.own_params());
        out
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut out = self.tok2vec.params_mut();
        out.extend([
            &mut self.prev_tag,
            &mut self.no_entity,
            &mut self.out_w,
            &mut self.out_b,
        ]);
        out
    }
}

/// Sorted entity classes occurring in `docs`.
pub fn entity_classes(docs: &[AnnotatedDoc]) -> Vec<String> {
    docs.iter()
        .flat_map(|d| d.entities().into_iter().map(|e| e.label))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

/// Copy of `docs` without entities of classes outside `classes`.
fn restrict_classes(docs: &[AnnotatedDoc], classes: &[String]) -> Vec<AnnotatedDoc> {
    docs.iter()
        .map(|doc| {
            let mut doc = doc.clone();
            set_entities(&mut doc, |e| classes.contains(&e.label));
            doc
        })
        .collect()
}

/// Re-encodes the document's entities as valid BILOU tags, keeping those
/// accepted by `keep`.
fn set_entities(doc: &mut AnnotatedDoc, keep: impl Fn(&EntitySpan) -> bool) {
    let entities: Vec<EntitySpan> = doc.entities().into_iter().filter(|e| keep(e)).collect();
    let tags = spans_to_bilou(&entities, doc.len());
    for (token, tag) in doc.tokens.iter_mut().zip(tags) {
        token.ent = Some(tag);
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NerEpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub dev_f1: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct NerTrainLog {
    pub epochs: Vec<NerEpochRecord>,
    pub best_epoch: usize,
    /// Development classes unseen in training, scored as outside.
    pub unknown_dev_classes: Vec<String>,
}

struct Segment {
    texts: Vec<String>,
    sentences: Vec<(Range<usize>, Vec<usize>)>,
}

fn prepare(model: &NerModel, docs: &[AnnotatedDoc], k: usize) -> Vec<Segment> {
    let context = model.tok2vec.config().depth;
    let mut out = Vec::new();
    for doc in docs {
        let entities = doc.entities();
        let sentences = doc.sentences();
        for chunk in sentences.chunks(k.max(1)) {
            let range = chunk[0].start..chunk[chunk.len() - 1].end;
            let lo = range.start.saturating_sub(context);
            let hi = (range.end + context).min(doc.len());
            let mut sents = Vec::new();
            for sent in chunk {
                let spans: Vec<EntitySpan> = entities
                    .iter()
                    .filter(|e| sent.contains(&e.start))
                    .map(|e| EntitySpan::new(e.start - sent.start, e.end - sent.start, e.label.clone()))
                    .collect();
                let gold = spans_to_bilou(&spans, sent.len())
                    .iter()
                    .map(|t| model.tag_index(t).unwrap_or(0))
                    .collect();
                sents.push((sent.start - lo..sent.end - lo, gold));
            }
            out.push(Segment {
                texts: doc.tokens[lo..hi].iter().map(|t| t.text.clone()).collect(),
                sentences: sents,
            });
        }
    }
    out
}

fn dev_f1(model: &NerModel, dev: &[AnnotatedDoc]) -> Result<f64> {
    let sys: Vec<AnnotatedDoc> = dev
        .iter()
        .map(|d| {
            let mut d = d.clone();
            model.recognize(&mut d);
            d
        })
        .collect();
    Ok(evaluate_ner(dev, &sys)?.f1())
}

/// Trains an entity recognizer on documents carrying BILOU tags, starting
/// from `tok2vec`, and keeps the epoch with the best development span F1.
pub fn train_ner(
    tok2vec: Tok2Vec,
    train: &[AnnotatedDoc],
    dev: &[AnnotatedDoc],
    config: &TrainConfig,
) -> Result<(NerModel, NerTrainLog)> {
    if train.iter().all(|d| d.is_empty()) {
        return Err(Error::Contract("entity training set is empty".to_owned()));
    }
    let classes = entity_classes(train);
    let mut log = NerTrainLog {
        unknown_dev_classes: entity_classes(dev)
            .into_iter()
            .filter(|c| !classes.contains(c))
            .collect(),
        ..NerTrainLog::default()
    };
    if !log.unknown_dev_classes.is_empty() {
        warn!(
            "entity classes absent from training data are scored as outside: {}",
            log.unknown_dev_classes.join(", ")
        );
    }
    let dev = if dev.is_empty() {
        train.to_vec()
    } else {
        restrict_classes(dev, &classes)
    };
    let mut model = NerModel::new(tok2vec, classes, config.seed);
    let data = prepare(&model, train, config.segment_sentences);
    let mut rng = train_rng(config.seed);
    let mut adam = Adam::new(config);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut best: Option<(f64, NerModel)> = None;

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut batches = 0;
        for batch in order.chunks(config.batch_size.max(1)) {
            let n: usize = batch
                .iter()
                .map(|&i| data[i].sentences.iter().map(|(r, _)| r.len()).sum::<usize>())
                .sum();
            let scale = 1.0 / n.max(1) as f64;
            let mut loss = 0.0;
            for &i in batch {
                let seg = &data[i];
                if seg.texts.is_empty() {
                    continue;
                }
                let (h, cache) = model.tok2vec.forward(&seg.texts, config.dropout, &mut rng);
                let (l, dh) = model.loss(&h, &seg.sentences, scale);
                loss += l;
                model.tok2vec.backward(&cache, dh);
            }
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!(
                    "entity loss is {} in epoch {} after {} updates",
                    loss, epoch, batches
                )));
            }
            adam.step(&mut model.params_mut());
            epoch_loss += loss;
            batches += 1;
        }
        let f1 = dev_f1(&model, &dev)?;
        let mean_loss = epoch_loss / batches.max(1) as f64;
        info!("epoch {:>3}  entity loss {:.4}  dev F1 {:.4}", epoch, mean_loss, f1);
        log.epochs.push(NerEpochRecord {
            epoch,
            loss: mean_loss,
            dev_f1: f1,
        });
        if best.as_ref().is_none_or(|(score, _)| f1 >= *score) {
            best = Some((f1, model.clone()));
            log.best_epoch = epoch;
        }
    }
    if let Some((_, m)) = best {
        model = m;
    }
    model.round_to_f32();
    Ok((model, log))
}

/// Whether every sentence of `doc` carries a valid BILOU sequence.
pub fn tags_are_valid(doc: &AnnotatedDoc) -> bool {
    doc.sentences().into_iter().all(|r| {
        let tags: Vec<BilouTag> = doc.tokens[r]
            .iter()
            .map(|t| t.ent.clone().unwrap_or(BilouTag::Outside))
            .collect();
        crate::bilou::is_valid_sequence(&tags)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::{gradient_check, EncoderConfig, StaticVectors};
    use rand::Rng;
    use std::sync::Arc;

    #[test]
    fn decision_layer_gradients() {
        let config = EncoderConfig {
            static_dim: 0,
            norm_rows: 16,
            affix_rows: 8,
            width: 6,
            depth: 1,
            pieces: 2,
            ..EncoderConfig::default()
        };
        let mut rng = init_rng(5);
        let tok2vec = Tok2Vec::new(config, Arc::new(StaticVectors::empty(0)), &mut rng).unwrap();
        let mut model = NerModel::new(tok2vec, vec!["LOC".into(), "PER".into()], 5);
        model.out_w.value.mapv_inplace(|_| rng.random_range(-0.5..0.5));
        let texts = ["Kovács", "János", "Budapesten", "él", "."];
        // B-PER L-PER U-LOC O O
        let sentences = vec![(0..5, vec![5, 7, 4, 0, 0])];
        let err = gradient_check(
            &mut model,
            |m| {
                let mut r = init_rng(0);
                let (h, cache) = m.tok2vec.forward(&texts, 0.0, &mut r);
                let (loss, dh) = m.loss(&h, &sentences, 0.2);
                m.tok2vec.backward(&cache, dh);
                loss
            },
            500,
            &mut rng,
        );
        assert!(err <= 1e-4, "{}", err);
    }

    #[test]
    fn tag_inventory_layout() {
        let config = EncoderConfig {
            static_dim: 0,
            width: 4,
            depth: 1,
            ..EncoderConfig::default()
        };
        let tok2vec = Tok2Vec::new(config, Arc::new(StaticVectors::empty(0)), &mut init_rng(1)).unwrap();
        let model = NerModel::new(tok2vec, vec!["LOC".into(), "PER".into()], 1);
        let names: Vec<String> = model.tags().iter().map(|t| t.to_string()).collect();
        assert_eq!(names, ["O", "B-LOC", "I-LOC", "L-LOC", "U-LOC", "B-PER", "I-PER", "L-PER", "U-PER"]);
        // open tags are not allowed on a sentence's last token
        assert_eq!(model.allowed(None, true), vec![true, false, false, false, true, false, false, false, true]);
    }
}

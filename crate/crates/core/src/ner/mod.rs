//! Named entity recognition with BILOU tags.

mod model;

pub use crate::bilou::{bilou_to_spans, is_valid_sequence, spans_to_bilou, transition_allowed, BilouTag};
pub use model::{entity_classes, tags_are_valid, train_ner, NerEpochRecord, NerModel, NerTrainLog, PREV_TAG_WIDTH};

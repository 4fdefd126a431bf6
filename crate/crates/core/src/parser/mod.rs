//! Greedy transition-based dependency parsing.

mod model;
mod transition;

pub use model::{repair_tree, ParserExample, ParserModel, REPAIR_LABEL, ROOT_LABEL};
pub use transition::{
    is_projective, oracle_actions, oracle_walk, Action, ParserState, Slot, N_SLOTS, ROOT,
};

use std::ops::Range;

use crate::doc::{AnnotatedDoc, Head};
use crate::error::{Error, Result};

/// Gold head nodes and label indices of the sentence `range`, if every token
/// carries a head inside the sentence and a relation known to the model.
pub fn gold_tree(
    doc: &AnnotatedDoc,
    range: Range<usize>,
    model: &ParserModel,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut heads = Vec::with_capacity(range.len());
    let mut labels = Vec::with_capacity(range.len());
    for i in range.clone() {
        let token = &doc.tokens[i];
        let head = match token.head {
            Some(Head::Root) => ROOT,
            Some(Head::Token(h)) if range.contains(&h) => h - range.start + 1,
            Some(Head::Token(_)) => {
                return Err(Error::OracleUnavailable(format!(
                    "token {} is attached outside its sentence",
                    i
                )))
            }
            None => {
                return Err(Error::OracleUnavailable(format!("token {} has no head", i)))
            }
        };
        let label = token
            .deprel
            .as_deref()
            .and_then(|d| model.label_index(d))
            .ok_or_else(|| {
                Error::OracleUnavailable(format!("token {} has an unknown relation", i))
            })?;
        heads.push(head);
        labels.push(label);
    }
    Ok((heads, labels))
}

/// Training examples for every state the oracle visits in one sentence.
pub fn oracle_examples(heads: &[usize], labels: &[usize], n_labels: usize) -> Result<Vec<ParserExample>> {
    let mut out = Vec::with_capacity(2 * heads.len());
    oracle_walk(heads, labels, |state, action| {
        out.push(ParserExample {
            slots: state.slots(),
            legal: state.legal_mask(n_labels),
            gold: action.index(n_labels),
        })
    })?;
    Ok(out)
}

/// Sets head and relation of every token, parsing each sentence of `doc`
/// independently from the encoder rows `h` of the whole document.
pub fn parse_doc(doc: &mut AnnotatedDoc, h: &ndarray::Array2<f64>, model: &ParserModel) {
    let ranges = doc.sentences();
    let parses = model.parse_sentences(&h.view(), &ranges);
    for (range, arcs) in ranges.into_iter().zip(parses) {
        for (k, (head, label)) in arcs.into_iter().enumerate() {
            let token = &mut doc.tokens[range.start + k];
            token.head = Some(if head == ROOT {
                Head::Root
            } else {
                Head::Token(range.start + head - 1)
            });
            token.deprel = Some(label);
        }
    }
}

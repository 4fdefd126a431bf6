//! Two-column `token<TAB>tag` entity files with blank-line sentence breaks.
//! Tags may be IOB2 or BILOU (with E/S accepted for L/U); output is BILOU.

use std::fmt::Write as _;

use crate::bilou::{bilou_to_spans, spans_to_bilou, BilouTag};
use crate::doc::{AnnotatedDoc, EntitySpan, Token};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NerSentence {
    pub tokens: Vec<String>,
    pub spans: Vec<EntitySpan>,
}

pub fn read_ner_tsv(input: &str) -> Result<Vec<NerSentence>> {
    let mut sentences = Vec::new();
    let mut tokens = Vec::new();
    let mut tags = Vec::new();

    let mut flush = |tokens: &mut Vec<String>, tags: &mut Vec<BilouTag>| {
        if !tokens.is_empty() {
            sentences.push(NerSentence {
                tokens: std::mem::take(tokens),
                spans: bilou_to_spans(tags),
            });
            tags.clear();
        }
    };

    for (idx, raw) in input.split('\n').enumerate() {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            flush(&mut tokens, &mut tags);
            continue;
        }
        let (token, tag) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(idx + 1, "expected two tab-separated columns"))?;
        if token.is_empty() || tag.contains('\t') {
            return Err(Error::parse(idx + 1, "expected two tab-separated columns"));
        }
        let tag: BilouTag = tag.parse().map_err(|e: String| Error::parse(idx + 1, e))?;
        tokens.push(token.to_owned());
        tags.push(tag);
    }
    flush(&mut tokens, &mut tags);
    Ok(sentences)
}

pub fn write_ner_tsv(sentences: &[NerSentence]) -> String {
    let mut out = String::new();
    for sentence in sentences {
        let tags = spans_to_bilou(&sentence.spans, sentence.tokens.len());
        for (token, tag) in sentence.tokens.iter().zip(&tags) {
            let _ = writeln!(out, "{}\t{}", token, tag);
        }
        out.push('\n');
    }
    out
}

/// Groups sentences into documents of at most `per_doc` sentences, tokens
/// separated by single spaces, with BILOU tags set on every token.
pub fn sentences_to_docs(sentences: &[NerSentence], per_doc: usize) -> Vec<AnnotatedDoc> {
    sentences
        .chunks(per_doc.max(1))
        .map(|chunk| {
            let mut tokens = Vec::new();
            for sentence in chunk {
                let tags = spans_to_bilou(&sentence.spans, sentence.tokens.len());
                for (i, (text, tag)) in sentence.tokens.iter().zip(tags).enumerate() {
                    let mut token = Token::new(text.as_str(), " ");
                    token.is_sent_start = Some(i == 0);
                    token.ent = Some(tag);
                    tokens.push(token);
                }
            }
            AnnotatedDoc::from_tokens("", tokens)
        })
        .collect()
}

/// Splits documents back into sentences with their entity spans.
pub fn docs_to_sentences(docs: &[AnnotatedDoc]) -> Vec<NerSentence> {
    let mut out = Vec::new();
    for doc in docs {
        let entities = doc.entities();
        for range in doc.sentences() {
            out.push(NerSentence {
                tokens: doc.tokens[range.clone()].iter().map(|t| t.text.clone()).collect(),
                spans: entities
                    .iter()
                    .filter(|s| range.contains(&s.start))
                    .map(|s| EntitySpan::new(s.start - range.start, s.end - range.start, s.label.clone()))
                    .collect(),
            });
        }
    }
    out
}

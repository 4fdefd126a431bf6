//! Word-level precision, recall and F1 of system annotations against gold.
//!
//! Tokens are aligned by their extents over the concatenation of all
//! non-whitespace characters, so differing tokenizations of the same text
//! can be compared. Attribute metrics count a token as correct only when it
//! is aligned and the attribute agrees.

use std::collections::{BTreeSet, HashMap};
use std::fmt::{self, Write as _};

use crate::doc::{AnnotatedDoc, Head};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Score {
    pub gold: usize,
    pub system: usize,
    pub correct: usize,
}

impl Score {
    pub fn precision(&self) -> f64 {
        ratio(self.correct, self.system)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.correct, self.gold)
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EvalReport {
    pub tokens: Score,
    pub sentences: Score,
    pub upos: Score,
    pub ufeats: Score,
    pub lemmas: Score,
    pub uas: Score,
    pub las: Score,
    pub ner: Option<Score>,
}

impl EvalReport {
    pub fn metrics(&self) -> Vec<(&'static str, Score)> {
        let mut out = vec![
            ("Tokens", self.tokens),
            ("Sentences", self.sentences),
            ("UPOS", self.upos),
            ("UFeats", self.ufeats),
            ("Lemmas", self.lemmas),
            ("UAS", self.uas),
            ("LAS", self.las),
        ];
        if let Some(ner) = self.ner {
            out.push(("NER", ner));
        }
        out
    }

    /// One `metric<TAB>precision<TAB>recall<TAB>f1` line per metric.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (name, s) in self.metrics() {
            let _ = writeln!(
                out,
                "{}\t{:.4}\t{:.4}\t{:.4}",
                name,
                s.precision(),
                s.recall(),
                s.f1()
            );
        }
        out
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Metric     | Precision |    Recall |  F1 Score")?;
        writeln!(f, "-----------+-----------+-----------+-----------")?;
        for (name, s) in self.metrics() {
            writeln!(
                f,
                "{:<10} | {:>9.2} | {:>9.2} | {:>9.2}",
                name,
                100.0 * s.precision(),
                100.0 * s.recall(),
                100.0 * s.f1()
            )?;
        }
        Ok(())
    }
}

/// A token's extent in non-whitespace character coordinates.
type Span = (usize, usize);

struct Flat<'a> {
    spans: Vec<Span>,
    /// Global index of each token's head; `None` for the root.
    heads: Vec<Option<Option<usize>>>,
    tokens: Vec<&'a crate::doc::Token>,
    sentences: Vec<Span>,
}

fn flatten<'a>(docs: &'a [AnnotatedDoc], stream: &mut String) -> Flat<'a> {
    let mut flat = Flat {
        spans: Vec::new(),
        heads: Vec::new(),
        tokens: Vec::new(),
        sentences: Vec::new(),
    };
    let mut pos = 0;
    for doc in docs {
        let base = flat.tokens.len();
        let mut doc_spans = Vec::with_capacity(doc.tokens.len());
        for token in &doc.tokens {
            let start = pos;
            for c in token.text.chars().filter(|c| !c.is_whitespace()) {
                stream.push(c);
                pos += 1;
            }
            doc_spans.push((start, pos));
            flat.tokens.push(token);
            flat.heads.push(token.head.map(|h| match h {
                Head::Root => None,
                Head::Token(i) => Some(base + i),
            }));
        }
        for range in doc.sentences() {
            flat.sentences
                .push((doc_spans[range.start].0, doc_spans[range.end - 1].1));
        }
        flat.spans.extend(doc_spans);
    }
    flat
}

fn comparable(gold: &str, system: &str) -> Result<()> {
    if gold == system {
        return Ok(());
    }
    let at = gold
        .chars()
        .zip(system.chars())
        .take_while(|(a, b)| a == b)
        .count();
    Err(Error::Incomparable(format!(
        "gold and system texts differ at non-whitespace character {}",
        at
    )))
}

/// Scores system documents against gold documents covering the same text.
pub fn evaluate(gold: &[AnnotatedDoc], system: &[AnnotatedDoc]) -> Result<EvalReport> {
    let (mut gold_text, mut sys_text) = (String::new(), String::new());
    let g = flatten(gold, &mut gold_text);
    let s = flatten(system, &mut sys_text);
    comparable(&gold_text, &sys_text)?;

    let sys_by_span: HashMap<Span, usize> = s
        .spans
        .iter()
        .enumerate()
        .filter(|(_, sp)| sp.0 < sp.1)
        .map(|(i, &sp)| (sp, i))
        .collect();
    // gold token index -> aligned system token index
    let align: Vec<Option<usize>> = g
        .spans
        .iter()
        .map(|sp| if sp.0 < sp.1 { sys_by_span.get(sp).copied() } else { None })
        .collect();

    let count = |n_gold: usize, n_sys: usize| Score {
        gold: n_gold,
        system: n_sys,
        correct: 0,
    };
    let mut report = EvalReport {
        tokens: count(g.tokens.len(), s.tokens.len()),
        sentences: count(g.sentences.len(), s.sentences.len()),
        ..EvalReport::default()
    };
    for field in [
        &mut report.upos,
        &mut report.ufeats,
        &mut report.lemmas,
        &mut report.uas,
        &mut report.las,
    ] {
        *field = count(g.tokens.len(), s.tokens.len());
    }

    let sys_sentences: BTreeSet<Span> = s.sentences.iter().copied().collect();
    report.sentences.correct = g
        .sentences
        .iter()
        .filter(|sp| sys_sentences.contains(sp))
        .count();

    for (gi, si) in align.iter().enumerate() {
        let Some(si) = *si else { continue };
        let (gt, st) = (g.tokens[gi], s.tokens[si]);
        report.tokens.correct += 1;
        report.upos.correct += usize::from(gt.upos == st.upos);
        report.ufeats.correct += usize::from(
            gt.feats.clone().unwrap_or_default() == st.feats.clone().unwrap_or_default(),
        );
        report.lemmas.correct += usize::from(gt.lemma == st.lemma);
        let head_ok = match (g.heads[gi], s.heads[si]) {
            (None, None) => true,
            (Some(None), Some(None)) => true,
            (Some(Some(gh)), Some(Some(sh))) => align[gh] == Some(sh),
            _ => false,
        };
        if head_ok {
            report.uas.correct += 1;
            report.las.correct += usize::from(gt.deprel == st.deprel);
        }
    }
    Ok(report)
}

/// Exact-match entity span scores over identically tokenized documents.
pub fn evaluate_ner(gold: &[AnnotatedDoc], system: &[AnnotatedDoc]) -> Result<Score> {
    let texts = |docs: &[AnnotatedDoc]| -> Vec<String> {
        docs.iter()
            .flat_map(|d| d.tokens.iter().map(|t| t.text.clone()))
            .collect()
    };
    let (gt, st) = (texts(gold), texts(system));
    if gt != st || gold.len() != system.len() {
        let at = gt.iter().zip(&st).take_while(|(a, b)| a == b).count();
        return Err(Error::Incomparable(format!(
            "gold and system tokens differ at token {}",
            at
        )));
    }
    let spans = |docs: &[AnnotatedDoc]| -> BTreeSet<(usize, usize, usize, String)> {
        docs.iter()
            .enumerate()
            .flat_map(|(d, doc)| {
                doc.entities()
                    .into_iter()
                    .map(move |e| (d, e.start, e.end, e.label))
            })
            .collect()
    };
    let (gs, ss) = (spans(gold), spans(system));
    Ok(Score {
        gold: gs.len(),
        system: ss.len(),
        correct: gs.intersection(&ss).count(),
    })
}

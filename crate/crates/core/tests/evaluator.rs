mod common;

use hunlp::conllu::read_conllu;
use hunlp::eval::{evaluate, evaluate_ner, EvalReport};
use hunlp::{AnnotatedDoc, Error, Head, MorphFeats, Token};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn f1s(r: &EvalReport) -> Vec<(&'static str, f64)> {
    r.metrics().into_iter().map(|(n, s)| (n, s.f1())).collect()
}

fn corpus() -> Vec<AnnotatedDoc> {
    let mut docs = common::toy_docs();
    docs.extend(common::synthetic_docs(6, 8, 4));
    docs
}

#[test]
fn gold_against_itself_is_perfect() {
    let docs = corpus();
    let r = evaluate(&docs, &docs).unwrap();
    for (name, s) in r.metrics() {
        assert_eq!((s.precision(), s.recall(), s.f1()), (1.0, 1.0, 1.0), "{}", name);
    }
    assert_eq!(evaluate_ner(&docs, &docs).unwrap().f1(), 1.0);
}

const GOLD: &str = "\
1\tNem\tnem\tADV\t_\t_\t2\tadvmod\t_\t_
2\ttudom\ttud\tVERB\t_\t_\t0\troot\t_\t_
3\tNew\tNew\tPROPN\t_\t_\t2\tobj\t_\t_
4\tYork\tYork\tPROPN\t_\t_\t3\tflat:name\t_\t_

";

const MERGED: &str = "\
1\tNem\tnem\tADV\t_\t_\t2\tadvmod\t_\t_
2\ttudom\ttud\tVERB\t_\t_\t0\troot\t_\t_
3\tNewYork\tNewYork\tPROPN\t_\t_\t2\tobj\t_\tSpaceAfter=No

";

#[test]
fn merged_token_fixture() {
    let gold = read_conllu(GOLD).unwrap();
    // "New York" and "NewYork" have the same non-whitespace characters.
    let sys = read_conllu(MERGED).unwrap();
    let r = evaluate(&gold, &sys).unwrap();
    assert_eq!((r.tokens.gold, r.tokens.system, r.tokens.correct), (4, 3, 2));
    assert_eq!(r.tokens.precision(), 2.0 / 3.0);
    assert_eq!(r.tokens.recall(), 0.5);
    assert!((r.tokens.f1() - 4.0 / 7.0).abs() < 1e-15);
    assert_eq!(r.uas.correct, 2);
}

#[test]
fn one_wrong_tag_in_ten() {
    let words = ["a", "b", "c", "d", "e", "f", "g", "h", "i", "j"];
    let make = |wrong: bool| {
        let tokens = words
            .iter()
            .enumerate()
            .map(|(i, w)| {
                let mut t = Token::new(*w, " ");
                t.upos = Some(if wrong && i == 4 { "VERB" } else { "NOUN" }.to_owned());
                t
            })
            .collect();
        vec![AnnotatedDoc::from_tokens("", tokens)]
    };
    let r = evaluate(&make(false), &make(true)).unwrap();
    assert!((r.upos.f1() - 0.9).abs() < 1e-12);
    assert_eq!(r.tokens.f1(), 1.0);
}

#[test]
fn entity_scores_and_incomparable_inputs() {
    let with_tags = |tags: &[&str]| {
        let tokens = tags
            .iter()
            .enumerate()
            .map(|(i, tag)| {
                let mut t = Token::new(format!("w{}", i), " ");
                t.ent = Some(tag.parse().unwrap());
                t
            })
            .collect();
        vec![AnnotatedDoc::from_tokens("", tokens)]
    };
    let gold = with_tags(&["U-PER", "O", "B-LOC", "L-LOC", "O"]);
    let sys = with_tags(&["U-PER", "O", "U-LOC", "O", "U-ORG"]);
    let s = evaluate_ner(&gold, &sys).unwrap();
    assert_eq!((s.gold, s.system, s.correct), (2, 3, 1));
    let sys = with_tags(&["U-PER", "O", "O", "O", "U-ORG"]);
    let s = evaluate_ner(&gold, &sys).unwrap();
    assert_eq!((s.precision(), s.recall(), s.f1()), (0.5, 0.5, 0.5));

    let shorter = with_tags(&["O", "O"]);
    assert!(matches!(evaluate_ner(&gold, &shorter), Err(Error::Incomparable(_))));
    assert!(matches!(evaluate(&gold, &shorter), Err(Error::Incomparable(_))));
}

#[derive(Clone, Copy, Debug)]
enum Field {
    Upos,
    Feats,
    Lemma,
    Head,
    Deprel,
    SentStart,
}

/// Changes one field of token `i` to a value that differs from gold and
/// returns the metric that must drop.
fn corrupt(doc: &mut AnnotatedDoc, i: usize, field: Field, rng: &mut ChaCha8Rng) -> &'static str {
    let sentence = doc.sentences().into_iter().find(|r| r.contains(&i)).unwrap();
    let t = &mut doc.tokens[i];
    match field {
        Field::Upos => {
            t.upos = Some(format!("{}X", t.upos.clone().unwrap_or_default()));
            "UPOS"
        }
        Field::Feats => {
            let mut f = t.feats.clone().unwrap_or_else(MorphFeats::new);
            f.insert("Corrupt", format!("{}", rng.random_range(0..9)));
            t.feats = Some(f);
            "UFeats"
        }
        Field::Lemma => {
            t.lemma = Some(format!("{}~", t.lemma.clone().unwrap_or_default()));
            "Lemmas"
        }
        Field::Deprel => {
            t.deprel = Some(format!("{}:x", t.deprel.clone().unwrap_or_default()));
            "LAS"
        }
        Field::Head => {
            let gold = t.head;
            let candidates: Vec<Head> = std::iter::once(Head::Root)
                .chain(sentence.filter(|&j| j != i).map(Head::Token))
                .filter(|h| Some(*h) != gold)
                .collect();
            t.head = Some(candidates[rng.random_range(0..candidates.len())]);
            "UAS"
        }
        Field::SentStart => {
            t.is_sent_start = Some(t.is_sent_start != Some(true));
            "Sentences"
        }
    }
}

const FIELDS: [Field; 6] = [Field::Upos, Field::Feats, Field::Lemma, Field::Head, Field::Deprel, Field::SentStart];

#[test]
fn single_corruptions_never_raise_scores() {
    let gold = corpus();
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    for _ in 0..1000 {
        let mut sys = gold.clone();
        let d = rng.random_range(0..sys.len());
        let i = rng.random_range(1..sys[d].len());
        let field = FIELDS[rng.random_range(0..FIELDS.len())];
        let target = corrupt(&mut sys[d], i, field, &mut rng);
        let r = evaluate(&gold, &sys).unwrap();
        for (name, f1) in f1s(&r) {
            assert!(f1 <= 1.0, "{} rose after corrupting {:?}", name, field);
            if name == target {
                assert!(f1 < 1.0, "{} did not drop after corrupting {:?}", name, field);
            }
        }
    }
}

#[test]
fn accumulated_attribute_corruptions_are_monotone() {
    let gold = corpus();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut sys = gold.clone();
    let mut touched = std::collections::HashSet::new();
    let mut last = f1s(&evaluate(&gold, &sys).unwrap());
    for _ in 0..1000 {
        let d = rng.random_range(0..sys.len());
        let i = rng.random_range(0..sys[d].len());
        let field = FIELDS[rng.random_range(0..5)];
        if !touched.insert((d, i, field as u8)) {
            continue;
        }
        corrupt(&mut sys[d], i, field, &mut rng);
        let now = f1s(&evaluate(&gold, &sys).unwrap());
        for ((name, before), (_, after)) in last.iter().zip(&now) {
            assert!(after <= before, "{} rose from {} to {}", name, before, after);
        }
        last = now;
    }
}

#[test]
fn whitespace_reflow_changes_nothing() {
    let gold = corpus();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let reflow = |docs: &[AnnotatedDoc], rng: &mut ChaCha8Rng| -> Vec<AnnotatedDoc> {
        docs.iter()
            .map(|d| {
                let tokens = d
                    .tokens
                    .iter()
                    .map(|t| {
                        let mut t = t.clone();
                        t.trailing_ws = ["", " ", "\n", "  \t"][rng.random_range(0..4)].to_owned();
                        t
                    })
                    .collect();
                let mut out = AnnotatedDoc::from_tokens(["", "\n "][rng.random_range(0..2)], tokens);
                for (a, b) in out.tokens.iter_mut().zip(&d.tokens) {
                    a.is_sent_start = b.is_sent_start;
                }
                out
            })
            .collect()
    };
    let baseline = f1s(&evaluate(&gold, &gold).unwrap());
    for _ in 0..20 {
        let (g, s) = (reflow(&gold, &mut rng), reflow(&gold, &mut rng));
        assert_eq!(f1s(&evaluate(&g, &s).unwrap()), baseline);
    }
}

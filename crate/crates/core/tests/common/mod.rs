//! A seeded generator of small Hungarian-like treebanks with gold UPOS,
//! FEATS, lemmas, projective dependency trees, sentence starts and BILOU
//! entity tags. Suffixes follow front/back vowel harmony and the a→á
//! lengthening of stem-final vowels, so lemmas are not always prefixes of
//! their forms.

#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use hunlp::bilou::BilouTag;
use hunlp::{AnnotatedDoc, Head, MorphFeats, Token};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn data_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data").join(name)
}

pub fn toy_docs() -> Vec<AnnotatedDoc> {
    hunlp::conllu::read_conllu(&std::fs::read_to_string(data_path("toy.conllu")).unwrap()).unwrap()
}

#[derive(Clone, Copy, PartialEq)]
enum Harmony {
    Back,
    Front,
}

struct Noun {
    stem: &'static str,
    harmony: Harmony,
}

const fn back(stem: &'static str) -> Noun {
    Noun { stem, harmony: Harmony::Back }
}

const fn front(stem: &'static str) -> Noun {
    Noun { stem, harmony: Harmony::Front }
}

const NOUNS: &[Noun] = &[
    back("ház"), back("asztal"), back("város"), back("kutya"), back("alma"), back("hajó"),
    back("ablak"), back("autó"), back("bolt"), back("újság"), back("lap"), back("toll"),
    front("kert"), front("könyv"), front("szék"), front("gyerek"), front("ember"), front("mese"),
    front("erdő"), front("hegy"), front("épület"), front("leves"), front("cipő"), front("kép"),
];

const VERBS: &[Noun] = &[
    back("lát"), back("olvas"), back("talál"), back("vár"), back("kap"), back("hoz"),
    back("tanul"), front("kér"), front("keres"), front("szeret"), front("készít"), front("nézeget"),
];

const ADJS: &[&str] = &["nagy", "kicsi", "szép", "régi", "új", "piros", "magyar", "fehér", "hosszú", "okos"];

/// Name tokens with the harmony of the final token.
const NAMES: &[(&str, &[&str], Harmony)] = &[
    ("PER", &["Péter"], Harmony::Front),
    ("PER", &["Anna"], Harmony::Back),
    ("PER", &["Kovács", "Péter"], Harmony::Front),
    ("PER", &["Nagy", "Éva"], Harmony::Front),
    ("PER", &["Szabó", "János"], Harmony::Back),
    ("LOC", &["Budapest"], Harmony::Front),
    ("LOC", &["Debrecen"], Harmony::Front),
    ("LOC", &["Szeged"], Harmony::Front),
    ("LOC", &["Balaton"], Harmony::Back),
    ("ORG", &["Magyar", "Telekom"], Harmony::Back),
    ("ORG", &["Országos", "Bank"], Harmony::Back),
    ("ORG", &["Mol"], Harmony::Back),
];

#[derive(Clone, Copy)]
enum Case {
    Nom,
    Acc,
    Ine,
    Ill,
    Sup,
}

impl Case {
    fn name(self) -> &'static str {
        match self {
            Case::Nom => "Nom",
            Case::Acc => "Acc",
            Case::Ine => "Ine",
            Case::Ill => "Ill",
            Case::Sup => "Sup",
        }
    }
}

fn ends_with_vowel(s: &str) -> bool {
    s.chars().last().is_some_and(|c| "aeiouáéíóőúűöü".contains(c))
}

/// Lengthens a final a/e before a suffix.
fn lengthen(stem: &str) -> String {
    let mut chars: Vec<char> = stem.chars().collect();
    match chars.last_mut() {
        Some(c @ 'a') => *c = 'á',
        Some(c @ 'e') => *c = 'é',
        _ => {}
    }
    chars.into_iter().collect()
}

fn inflect(stem: &str, h: Harmony, plural: bool, case: Case) -> String {
    let pick = |b: &str, f: &str| if h == Harmony::Back { b.to_owned() } else { f.to_owned() };
    let mut form = stem.to_owned();
    if plural {
        form = if ends_with_vowel(&form) {
            lengthen(&form) + "k"
        } else {
            form + &pick("ok", "ek")
        };
    }
    let suffix = match case {
        Case::Nom => return form,
        Case::Acc if ends_with_vowel(&form) => return lengthen(&form) + "t",
        Case::Acc => pick("ot", "et"),
        Case::Ine => pick("ban", "ben"),
        Case::Ill => pick("ba", "be"),
        Case::Sup if ends_with_vowel(&form) => return lengthen(&form) + "n",
        Case::Sup => pick("on", "en"),
    };
    if matches!(case, Case::Ine | Case::Ill) {
        form = lengthen(&form);
    }
    form + &suffix
}

fn conjugate(stem: &str, h: Harmony, person: u8, plural: bool) -> String {
    let pick = |b: &'static str, f: &'static str| if h == Harmony::Back { b } else { f };
    let sibilant = stem.ends_with('s') || stem.ends_with('z');
    let suffix = match (person, plural) {
        (1, false) => pick("ok", "ek"),
        (2, false) if sibilant => pick("ol", "el"),
        (2, false) => "sz",
        (3, false) => "",
        (1, true) => pick("unk", "ünk"),
        (2, true) => pick("tok", "tek"),
        _ => pick("nak", "nek"),
    };
    format!("{}{}", stem, suffix)
}

fn feats(pairs: &[(&str, &str)]) -> MorphFeats {
    let mut f = MorphFeats::new();
    for (k, v) in pairs {
        f.insert(*k, *v);
    }
    f
}

struct Word {
    text: String,
    upos: &'static str,
    feats: MorphFeats,
    lemma: String,
    /// Index of the head within the sentence, `None` for the root.
    head: Option<usize>,
    deprel: &'static str,
    ent: BilouTag,
}

impl Word {
    fn new(text: impl Into<String>, upos: &'static str, feats: MorphFeats, lemma: impl Into<String>) -> Self {
        Word {
            text: text.into(),
            upos,
            feats,
            lemma: lemma.into(),
            head: None,
            deprel: "root",
            ent: BilouTag::Outside,
        }
    }
}

/// Words of one phrase; `head` is the phrase head's position in it.
struct Phrase {
    words: Vec<Word>,
    head: usize,
}

fn article(next: &str, rng: &mut ChaCha8Rng) -> Word {
    if rng.random_bool(0.3) {
        return Word::new("egy", "DET", feats(&[("Definite", "Ind"), ("PronType", "Art")]), "egy");
    }
    let starts_vowel = next
        .chars()
        .next()
        .is_some_and(|c| "aeiouáéíóőúűöüAEIOUÁÉÍÓŐÚŰÖÜ".contains(c));
    let a = if starts_vowel { "az" } else { "a" };
    Word::new(a, "DET", feats(&[("Definite", "Def"), ("PronType", "Art")]), a)
}

fn noun_phrase(case: Case, rng: &mut ChaCha8Rng) -> Phrase {
    if rng.random_bool(0.3) {
        let &(class, parts, harmony) = NAMES.choose(rng).unwrap();
        let n = parts.len();
        let mut words: Vec<Word> = parts
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                let text = if i + 1 == n { inflect(p, harmony, false, case) } else { p.to_owned() };
                let f = feats(&[("Case", if i + 1 == n { case.name() } else { "Nom" }), ("Number", "Sing")]);
                Word::new(text, "PROPN", f, p)
            })
            .collect();
        for (i, w) in words.iter_mut().enumerate() {
            w.ent = match (n, i) {
                (1, _) => BilouTag::Unit(class.into()),
                (_, 0) => BilouTag::Begin(class.into()),
                (_, i) if i + 1 == n => BilouTag::Last(class.into()),
                _ => BilouTag::Inside(class.into()),
            };
            if i > 0 {
                w.head = Some(0);
                w.deprel = "flat:name";
            }
        }
        return Phrase { words, head: 0 };
    }
    if matches!(case, Case::Ine) && rng.random_bool(0.15) {
        let year: u32 = rng.random_range(1990..2024);
        let suffix = match year % 10 {
            3 | 6 | 8 => "ban",
            _ => "ben",
        };
        let w = Word::new(
            format!("{}-{}", year, suffix),
            "NUM",
            feats(&[("Case", "Ine"), ("NumType", "Card"), ("Number", "Sing")]),
            year.to_string(),
        );
        return Phrase { words: vec![w], head: 0 };
    }
    let noun = NOUNS.choose(rng).unwrap();
    let plural = rng.random_bool(0.25);
    let number = if plural { "Plur" } else { "Sing" };
    let mut words = Vec::new();
    let adj = rng.random_bool(0.4).then(|| *ADJS.choose(rng).unwrap());
    let first = adj.unwrap_or(noun.stem);
    if rng.random_bool(0.7) {
        words.push(article(first, rng));
    }
    if let Some(a) = adj {
        words.push(Word::new(a, "ADJ", feats(&[("Case", "Nom"), ("Degree", "Pos"), ("Number", "Sing")]), a));
    }
    let head = words.len();
    words.push(Word::new(
        inflect(noun.stem, noun.harmony, plural, case),
        "NOUN",
        feats(&[("Case", case.name()), ("Number", number)]),
        noun.stem,
    ));
    for w in &mut words[..head] {
        w.head = Some(head);
        w.deprel = if w.upos == "DET" { "det" } else { "amod" };
    }
    Phrase { words, head }
}

fn sentence(rng: &mut ChaCha8Rng) -> Vec<Word> {
    let verb = VERBS.choose(rng).unwrap();
    let (subject, person, plural) = if rng.random_bool(0.3) {
        let (pron, person, plural) = *[("én", 1, false), ("te", 2, false), ("mi", 1, true), ("ti", 2, true)]
            .choose(rng)
            .unwrap();
        let f = feats(&[
            ("Case", "Nom"),
            ("Number", if plural { "Plur" } else { "Sing" }),
            ("Person", if person == 1 { "1" } else { "2" }),
            ("PronType", "Prs"),
        ]);
        (Phrase { words: vec![Word::new(pron, "PRON", f, pron)], head: 0 }, person, plural)
    } else {
        (noun_phrase(Case::Nom, rng), 3, false)
    };
    let vf = feats(&[
        ("Mood", "Ind"),
        ("Number", if plural { "Plur" } else { "Sing" }),
        ("Person", ["1", "2", "3"][person as usize - 1]),
        ("Tense", "Pres"),
        ("VerbForm", "Fin"),
    ]);
    let mut verb_phrase = vec![Word::new(conjugate(verb.stem, verb.harmony, person, plural), "VERB", vf, verb.stem)];
    let mut verb_head = 0;
    if rng.random_bool(0.15) {
        let mut neg = Word::new("nem", "ADV", feats(&[("PronType", "Neg")]), "nem");
        neg.head = Some(1);
        neg.deprel = "advmod";
        verb_phrase.insert(0, neg);
        verb_head = 1;
    }

    let mut parts: Vec<(Phrase, &'static str)> = vec![(subject, "nsubj")];
    if rng.random_bool(0.7) {
        parts.push((noun_phrase(Case::Acc, rng), "obj"));
    }
    if rng.random_bool(0.5) {
        let case = *[Case::Ine, Case::Ill, Case::Sup].choose(rng).unwrap();
        parts.push((noun_phrase(case, rng), "obl"));
    }
    let verb_slot = rng.random_range(0..=parts.len());

    let mut words: Vec<Word> = Vec::new();
    let mut attach: Vec<(usize, &'static str)> = Vec::new();
    let mut verb_index = 0;
    let mut slot = 0;
    let push_phrase = |words: &mut Vec<Word>, phrase: Phrase| -> usize {
        let offset = words.len();
        for mut w in phrase.words {
            w.head = w.head.map(|h| h + offset);
            words.push(w);
        }
        offset + phrase.head
    };
    for (phrase, rel) in parts {
        if slot == verb_slot {
            verb_index = push_phrase(&mut words, Phrase { words: std::mem::take(&mut verb_phrase), head: verb_head });
        }
        let h = push_phrase(&mut words, phrase);
        attach.push((h, rel));
        slot += 1;
    }
    if !verb_phrase.is_empty() {
        verb_index = push_phrase(&mut words, Phrase { words: verb_phrase, head: verb_head });
    }
    for (h, rel) in attach {
        words[h].head = Some(verb_index);
        words[h].deprel = rel;
    }
    words[verb_index].head = None;
    words[verb_index].deprel = "root";
    let mut stop = Word::new(if rng.random_bool(0.85) { "." } else { "!" }, "PUNCT", MorphFeats::new(), "");
    stop.lemma = stop.text.clone();
    stop.head = Some(verb_index);
    stop.deprel = "punct";
    words.push(stop);

    let first = &mut words[0];
    if first.upos != "PROPN" {
        let mut chars = first.text.chars();
        let c = chars.next().unwrap();
        first.text = c.to_uppercase().chain(chars).collect();
    }
    words
}

/// `n_docs` documents of `per_doc` sentences each.
pub fn synthetic_docs(n_docs: usize, per_doc: usize, seed: u64) -> Vec<AnnotatedDoc> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_docs)
        .map(|_| {
            let mut tokens = Vec::new();
            for _ in 0..per_doc {
                let words = sentence(&mut rng);
                let offset = tokens.len();
                let n = words.len();
                for (i, w) in words.into_iter().enumerate() {
                    let ws = if i + 2 == n { "" } else { " " };
                    let mut t = Token::new(w.text, ws);
                    t.is_sent_start = Some(i == 0);
                    t.upos = Some(w.upos.to_owned());
                    t.feats = Some(w.feats);
                    t.lemma = Some(w.lemma);
                    t.head = Some(match w.head {
                        Some(h) => Head::Token(h + offset),
                        None => Head::Root,
                    });
                    t.deprel = Some(w.deprel.to_owned());
                    t.ent = Some(w.ent);
                    tokens.push(t);
                }
            }
            if let Some(last) = tokens.last_mut() {
                last.trailing_ws = "\n".to_owned();
            }
            AnnotatedDoc::from_tokens("", tokens)
        })
        .collect()
}

/// Raw text of about `n_tokens` tokens, one paragraph per document.
pub fn synthetic_text(n_tokens: usize, seed: u64) -> Vec<String> {
    let mut out = Vec::new();
    let mut count = 0;
    let mut i = 0;
    while count < n_tokens {
        let doc = synthetic_docs(1, 10, seed.wrapping_add(i)).remove(0);
        count += doc.len();
        out.push(doc.source_text);
        i += 1;
    }
    out
}

/// Every distinct form of the generated language plus `extra` filler words,
/// each with a random `dim`-wide vector, in the textual `count dim` format.
pub fn synthetic_vectors(docs: &[AnnotatedDoc], extra: usize, dim: usize, seed: u64) -> String {
    let mut words: Vec<String> = docs
        .iter()
        .flat_map(|d| d.tokens.iter().map(|t| t.text.clone()))
        .collect();
    words.sort();
    words.dedup();
    words.extend((0..extra).map(|i| format!("szó{}", i)));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = format!("{} {}\n", words.len(), dim);
    for w in &words {
        out.push_str(w);
        for _ in 0..dim {
            let _ = write!(out, " {:.4}", rng.random_range(-1.0f32..1.0));
        }
        out.push('\n');
    }
    out
}

pub fn write_conllu(dir: &Path, name: &str, docs: &[AnnotatedDoc]) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, hunlp::conllu::write_conllu(docs)).unwrap();
    path
}

pub fn write_ner_tsv(dir: &Path, name: &str, docs: &[AnnotatedDoc]) -> PathBuf {
    let path = dir.join(name);
    let sentences = hunlp::ner_tsv::docs_to_sentences(docs);
    std::fs::write(&path, hunlp::ner_tsv::write_ner_tsv(&sentences)).unwrap();
    path
}

/// A configuration for a small and fast model over corpora written into `dir`.
pub fn small_config(dir: &Path, train: &[AnnotatedDoc], dev: &[AnnotatedDoc], epochs: usize) -> hunlp::pipeline::PipelineConfig {
    let mut config = hunlp::pipeline::PipelineConfig::default();
    config.paths.train = Some(write_conllu(dir, "train.conllu", train));
    if !dev.is_empty() {
        config.paths.dev = Some(write_conllu(dir, "dev.conllu", dev));
    }
    config.paths.ner_train = vec![write_ner_tsv(dir, "train.tsv", train)];
    config.encoder.static_dim = 0;
    config.encoder.width = 32;
    config.encoder.depth = 2;
    config.encoder.norm_rows = 512;
    config.encoder.affix_rows = 256;
    config.training.epochs = epochs;
    config.training.learning_rate = 0.002;
    config.training.batch_size = 4;
    config.training.segment_sentences = 4;
    config
}

/// Whether `heads` (head node of node `i + 1`, 0 for the root) forms a tree
/// in which every arc's span is dominated by its head.
pub fn is_projective_tree(heads: &[usize]) -> bool {
    let n = heads.len();
    let ancestor = |a: usize, mut d: usize| -> bool {
        for _ in 0..=n {
            if d == a {
                return true;
            }
            if d == 0 {
                return false;
            }
            d = heads[d - 1];
        }
        false
    };
    if (1..=n).any(|d| heads[d - 1] > n || heads[d - 1] == d || !ancestor(0, d)) {
        return false;
    }
    (1..=n).all(|d| {
        let h = heads[d - 1];
        (h.min(d) + 1..h.max(d)).all(|k| ancestor(h, k))
    })
}

/// A projective tree over `n` nodes drawn by rejection from uniformly
/// random head assignments.
pub fn sample_projective_tree(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    loop {
        let heads: Vec<usize> = (1..=n)
            .map(|d| {
                let h = rng.random_range(0..n);
                if h >= d { h + 1 } else { h }
            })
            .collect();
        if is_projective_tree(&heads) {
            return heads;
        }
    }
}

/// Accuracy of `lemmatizer` on the tokens of `docs` whose (masked form,
/// UPOS) pair is seen with a single masked lemma, as (correct, total).
pub fn lemma_self_consistency(docs: &[AnnotatedDoc], lemmatizer: &hunlp::lemmatizer::Lemmatizer) -> (usize, usize) {
    use std::collections::{BTreeMap, BTreeSet};
    let mask = |s: &str| -> String {
        let digits = s.chars().take_while(|c| c.is_ascii_digit()).count();
        "0".repeat(digits) + &s[digits..]
    };
    let key = |t: &Token| {
        let upos = t.upos.clone().unwrap();
        let form = if t.is_sent_start == Some(true) && upos != "PROPN" { t.text.to_lowercase() } else { t.text.clone() };
        (mask(&form), upos)
    };
    let tokens: Vec<&Token> = docs
        .iter()
        .flat_map(|d| &d.tokens)
        .filter(|t| t.upos.is_some() && t.lemma.is_some())
        .collect();
    let mut lemmas: BTreeMap<(String, String), BTreeSet<String>> = BTreeMap::new();
    for t in &tokens {
        lemmas.entry(key(t)).or_default().insert(mask(t.lemma.as_deref().unwrap()));
    }
    let mut correct = 0;
    let mut total = 0;
    for t in tokens {
        if lemmas[&key(t)].len() != 1 {
            continue;
        }
        total += 1;
        let feats = t.feats.as_ref().map(|f| f.to_string());
        let predicted = lemmatizer.lemmatize(&t.text, t.upos.as_deref().unwrap(), feats.as_deref(), t.is_sent_start == Some(true));
        correct += usize::from(Some(predicted.as_str()) == t.lemma.as_deref());
    }
    (correct, total)
}

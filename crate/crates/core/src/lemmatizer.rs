//! Suffix-rewrite lemmatization learned from `(form, tag, lemma, count)`
//! tuples.
//!
//! Every tuple yields a transform (strip `k` trailing characters, append a
//! string), computed on the lowercased form and lemma after masking a
//! leading digit run. Its count is added at each node along the reversed
//! form in a per-tag trie, ending in a word-boundary node. Lookup walks the
//! trie as deep as the form allows and applies the most frequent applicable
//! transform found there.

use std::cmp::Reverse;
use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::doc::AnnotatedDoc;
use crate::error::{Error, Result};

/// Marks the start of the form on a reversed path.
const BOUNDARY: char = '\0';
const PROPN: &str = "PROPN";
const KEY_SEPARATOR: char = ';';

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LemmaTransform {
    pub strip_len: usize,
    pub append: String,
}

impl LemmaTransform {
    /// The transform turning `form` into `lemma`, stripping everything after
    /// their longest common prefix.
    pub fn between(form: &str, lemma: &str) -> Self {
        let lcp = form
            .chars()
            .zip(lemma.chars())
            .take_while(|(a, b)| a == b)
            .count();
        LemmaTransform {
            strip_len: form.chars().count() - lcp,
            append: lemma.chars().skip(lcp).collect(),
        }
    }

    /// Applies the transform, or `None` if the form is too short.
    pub fn apply(&self, form: &str) -> Option<String> {
        let n = form.chars().count();
        let keep = n.checked_sub(self.strip_len)?;
        let mut out: String = form.chars().take(keep).collect();
        out.push_str(&self.append);
        Some(out)
    }
}

/// Replaces the leading run of ASCII digits with as many `0`s, returning the
/// masked form and the original run.
pub fn mask_digits(form: &str) -> (String, String) {
    let run: String = form.chars().take_while(char::is_ascii_digit).collect();
    let masked = "0".repeat(run.len()) + &form[run.len()..];
    (masked, run)
}

/// Restores a digit run masked by [`mask_digits`] if `text` still starts
/// with the zero run.
pub fn unmask_digits(text: &str, run: &str) -> String {
    let zeros = "0".repeat(run.len());
    match text.strip_prefix(zeros.as_str()) {
        Some(rest) if !run.is_empty() => format!("{}{}", run, rest),
        _ => text.to_owned(),
    }
}

/// One training observation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LemmaExample {
    pub form: String,
    pub upos: String,
    pub feats: Option<String>,
    pub lemma: String,
    pub count: u64,
}

#[derive(Clone, Debug, Default, PartialEq)]
struct Node {
    children: BTreeMap<char, usize>,
    counts: BTreeMap<LemmaTransform, u64>,
}

#[derive(Clone, Debug, PartialEq)]
struct Trie {
    nodes: Vec<Node>,
}

impl Default for Trie {
    fn default() -> Self {
        Trie {
            nodes: vec![Node::default()],
        }
    }
}

impl Trie {
    fn path(form: &str) -> impl Iterator<Item = char> + '_ {
        form.chars().rev().chain(std::iter::once(BOUNDARY))
    }

    fn add(&mut self, path: impl Iterator<Item = char>, transform: &LemmaTransform, count: u64) {
        let mut node = 0;
        *self.nodes[0].counts.entry(transform.clone()).or_insert(0) += count;
        for c in path {
            node = match self.nodes[node].children.get(&c) {
                Some(&next) => next,
                None => {
                    self.nodes.push(Node::default());
                    let next = self.nodes.len() - 1;
                    self.nodes[node].children.insert(c, next);
                    next
                }
            };
            *self.nodes[node].counts.entry(transform.clone()).or_insert(0) += count;
        }
    }

    fn deepest(&self, form: &str) -> &Node {
        let mut node = 0;
        for c in Trie::path(form) {
            match self.nodes[node].children.get(&c) {
                Some(&next) => node = next,
                None => break,
            }
        }
        &self.nodes[node]
    }

    fn lookup(&self, form: &str) -> Option<&LemmaTransform> {
        let n = form.chars().count();
        self.deepest(form)
            .counts
            .iter()
            .filter(|(t, _)| t.strip_len <= n)
            .max_by_key(|&(t, &count)| (count, Reverse(t)))
            .map(|(t, _)| t)
    }

    /// `(reversed path, node)` for every node, depth first in key order.
    fn walk(&self) -> Vec<(String, &Node)> {
        let mut out = Vec::new();
        let mut stack = vec![(String::new(), 0)];
        while let Some((path, id)) = stack.pop() {
            let node = &self.nodes[id];
            for (&c, &child) in node.children.iter().rev() {
                let mut p = path.clone();
                p.push(c);
                stack.push((p, child));
            }
            out.push((path, node));
        }
        out
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Lemmatizer {
    /// Also condition rules on the morphological features.
    key_feats: bool,
    tries: BTreeMap<String, Trie>,
}

fn feats_key(upos: &str, feats: &str) -> String {
    format!("{}{}{}", upos, KEY_SEPARATOR, feats)
}

impl Lemmatizer {
    pub fn key_feats(&self) -> bool {
        self.key_feats
    }

    pub fn learn<'a>(examples: impl IntoIterator<Item = &'a LemmaExample>, key_feats: bool) -> Self {
        let mut lemmatizer = Lemmatizer {
            key_feats,
            tries: BTreeMap::new(),
        };
        for ex in examples {
            if ex.lemma.is_empty() || ex.count == 0 {
                continue;
            }
            let (form, run) = mask_digits(&ex.form.to_lowercase());
            let lemma = ex.lemma.to_lowercase();
            let lemma = match lemma.strip_prefix(run.as_str()) {
                Some(rest) if !run.is_empty() => "0".repeat(run.len()) + rest,
                _ => lemma,
            };
            let transform = LemmaTransform::between(&form, &lemma);
            let mut keys = vec![ex.upos.clone()];
            if key_feats {
                keys.push(feats_key(&ex.upos, ex.feats.as_deref().unwrap_or("_")));
            }
            for key in keys {
                lemmatizer
                    .tries
                    .entry(key)
                    .or_default()
                    .add(Trie::path(&form), &transform, ex.count);
            }
        }
        lemmatizer
    }

    /// Learns from the gold forms, tags and lemmas of `docs`, counting
    /// repeated tuples.
    pub fn from_docs(docs: &[AnnotatedDoc], key_feats: bool) -> Self {
        Lemmatizer::learn(&lemma_examples(docs), key_feats)
    }

    /// The lemma of a token.
    pub fn lemmatize(&self, form: &str, upos: &str, feats: Option<&str>, sent_start: bool) -> String {
        let is_propn = upos == PROPN;
        let form = if sent_start && !is_propn {
            form.to_lowercase()
        } else {
            form.to_owned()
        };
        let (masked, run) = mask_digits(&form);
        let lower = masked.to_lowercase();
        let trie = feats
            .filter(|_| self.key_feats)
            .and_then(|f| self.tries.get(&feats_key(upos, f)))
            .or_else(|| self.tries.get(upos));
        let transform = trie.and_then(|t| t.lookup(&lower)).cloned().unwrap_or(LemmaTransform {
            strip_len: 0,
            append: String::new(),
        });
        let keep_case = is_propn && masked.chars().next().is_some_and(char::is_uppercase);
        let base = if keep_case { &masked } else { &lower };
        let lemma = transform
            .apply(base)
            .expect("selected transforms fit the form");
        unmask_digits(&lemma, &run)
    }

    /// Sets the lemma of every token from its form, UPOS and position.
    pub fn apply(&self, doc: &mut AnnotatedDoc) {
        for token in &mut doc.tokens {
            let feats = token.feats.as_ref().map(|f| f.to_string());
            token.lemma = Some(self.lemmatize(
                &token.text,
                token.upos.as_deref().unwrap_or("_"),
                feats.as_deref(),
                token.is_sent_start == Some(true),
            ));
        }
    }

    /// Rule lines `key<TAB>reversed-suffix<TAB>strip<TAB>append<TAB>count`,
    /// sorted, after a header naming the key granularity. The boundary is
    /// written as `^`.
    pub fn dump(&self) -> String {
        let mut lines = Vec::new();
        for (key, trie) in &self.tries {
            for (path, node) in trie.walk() {
                for (t, count) in &node.counts {
                    lines.push(format!(
                        "{}\t{}\t{}\t{}\t{}",
                        escape(key),
                        escape(&path),
                        t.strip_len,
                        escape(&t.append),
                        count
                    ));
                }
            }
        }
        lines.sort();
        let mut out = format!("# key = {}\n", if self.key_feats { "upos+feats" } else { "upos" });
        for line in lines {
            let _ = writeln!(out, "{}", line);
        }
        out
    }

    /// Reads rules written by [`Lemmatizer::dump`].
    pub fn from_dump(input: &str) -> Result<Self> {
        let mut lines = input.lines().enumerate();
        let key_feats = match lines.next().map(|(_, l)| l) {
            Some("# key = upos") => false,
            Some("# key = upos+feats") => true,
            _ => return Err(Error::parse(1, "missing '# key = …' header")),
        };
        let mut lemmatizer = Lemmatizer {
            key_feats,
            tries: BTreeMap::new(),
        };
        for (i, line) in lines {
            let lineno = i + 1;
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 5 {
                return Err(Error::parse(lineno, format!("expected 5 columns, found {}", cols.len())));
            }
            let field = |s: &str| unescape(s).map_err(|e| Error::parse(lineno, e));
            let key = field(cols[0])?;
            let path = field(cols[1])?;
            let strip_len = cols[2]
                .parse()
                .map_err(|_| Error::parse(lineno, "invalid strip length"))?;
            let append = field(cols[3])?;
            let count: u64 = cols[4]
                .parse()
                .map_err(|_| Error::parse(lineno, "invalid count"))?;
            let trie = lemmatizer.tries.entry(key).or_default();
            let mut node = 0;
            for c in path.chars() {
                node = match trie.nodes[node].children.get(&c) {
                    Some(&next) => next,
                    None => {
                        trie.nodes.push(Node::default());
                        let next = trie.nodes.len() - 1;
                        trie.nodes[node].children.insert(c, next);
                        next
                    }
                };
            }
            trie.nodes[node]
                .counts
                .insert(LemmaTransform { strip_len, append }, count);
        }
        Ok(lemmatizer)
    }
}

/// Counted `(form, UPOS, FEATS, lemma)` tuples of the tokens in `docs` that
/// carry a tag and a lemma. Sentence-initial forms of non-proper nouns are
/// lowercased, as they are before lookup.
pub fn lemma_examples(docs: &[AnnotatedDoc]) -> Vec<LemmaExample> {
    let mut counts: BTreeMap<(String, String, Option<String>, String), u64> = BTreeMap::new();
    for doc in docs {
        for token in &doc.tokens {
            let (Some(upos), Some(lemma)) = (&token.upos, &token.lemma) else {
                continue;
            };
            let form = if token.is_sent_start == Some(true) && upos != PROPN {
                token.text.to_lowercase()
            } else {
                token.text.clone()
            };
            let feats = token.feats.as_ref().map(|f| f.to_string());
            *counts
                .entry((form, upos.clone(), feats, lemma.clone()))
                .or_insert(0) += 1;
        }
    }
    counts
        .into_iter()
        .map(|((form, upos, feats, lemma), count)| LemmaExample {
            form,
            upos,
            feats,
            lemma,
            count,
        })
        .collect()
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            BOUNDARY => out.push('^'),
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '^' => out.push_str("\\^"),
            c => out.push(c),
        }
    }
    out
}

fn unescape(s: &str) -> std::result::Result<String, String> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        match c {
            '^' => out.push(BOUNDARY),
            '\\' => match chars.next() {
                Some('\\') => out.push('\\'),
                Some('t') => out.push('\t'),
                Some('n') => out.push('\n'),
                Some('^') => out.push('^'),
                other => return Err(format!("invalid escape \\{}", other.map_or(String::new(), String::from))),
            },
            c => out.push(c),
        }
    }
    Ok(out)
}

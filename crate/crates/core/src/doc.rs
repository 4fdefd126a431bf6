//! The annotation record shared by every pipeline stage.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use crate::bilou::BilouTag;
use crate::error::{Error, Result};

/// Attachment of a token in a dependency tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Head {
    Root,
    /// Document-level token index.
    Token(usize),
}

/// Morphological features as a canonical, key-sorted set of `key=value` pairs.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MorphFeats(BTreeMap<String, String>);

impl MorphFeats {
    pub fn new() -> Self {
        MorphFeats::default()
    }

    pub fn insert(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.0.insert(key.into(), value.into());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }
}

impl fmt::Display for MorphFeats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("_");
        }
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("|")?;
            }
            write!(f, "{}={}", k, v)?;
        }
        Ok(())
    }
}

impl FromStr for MorphFeats {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let mut feats = MorphFeats::new();
        if s == "_" || s.is_empty() {
            return Ok(feats);
        }
        for pair in s.split('|') {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| format!("feature without '=': {:?}", pair))?;
            if k.is_empty() || v.is_empty() {
                return Err(format!("empty feature key or value: {:?}", pair));
            }
            if feats.0.insert(k.to_owned(), v.to_owned()).is_some() {
                return Err(format!("duplicate feature key: {:?}", k));
            }
        }
        Ok(feats)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Token {
    pub text: String,
    /// Exact whitespace between this token and the next one.
    pub trailing_ws: String,
    /// Character (not byte) offsets into the document's source text.
    pub char_start: usize,
    pub char_end: usize,
    pub is_sent_start: Option<bool>,
    pub upos: Option<String>,
    pub feats: Option<MorphFeats>,
    pub lemma: Option<String>,
    pub head: Option<Head>,
    pub deprel: Option<String>,
    pub ent: Option<BilouTag>,
}

impl Token {
    /// A token carrying only its text and the whitespace after it. Offsets
    /// are assigned by [`AnnotatedDoc::from_tokens`].
    pub fn new(text: impl Into<String>, trailing_ws: impl Into<String>) -> Self {
        Token {
            text: text.into(),
            trailing_ws: trailing_ws.into(),
            ..Token::default()
        }
    }
}

/// An entity mention over the half-open token range `[start, end)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EntitySpan {
    pub start: usize,
    pub end: usize,
    pub label: String,
}

impl EntitySpan {
    pub fn new(start: usize, end: usize, label: impl Into<String>) -> Self {
        EntitySpan {
            start,
            end,
            label: label.into(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AnnotatedDoc {
    pub source_text: String,
    /// Whitespace preceding the first token.
    pub leading_ws: String,
    pub tokens: Vec<Token>,
}

impl AnnotatedDoc {
    /// Builds a document from tokens with text and trailing whitespace set,
    /// deriving the source text and character offsets. The first token is
    /// marked sentence-initial.
    pub fn from_tokens(leading_ws: impl Into<String>, mut tokens: Vec<Token>) -> Self {
        let leading_ws = leading_ws.into();
        let mut source_text = leading_ws.clone();
        let mut offset = leading_ws.chars().count();
        for token in &mut tokens {
            let len = token.text.chars().count();
            token.char_start = offset;
            token.char_end = offset + len;
            offset += len + token.trailing_ws.chars().count();
            source_text.push_str(&token.text);
            source_text.push_str(&token.trailing_ws);
        }
        if let Some(first) = tokens.first_mut() {
            first.is_sent_start = Some(true);
        }
        AnnotatedDoc {
            source_text,
            leading_ws,
            tokens,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Token index ranges of the sentences, each starting at a token flagged
    /// as sentence-initial. Token 0 always opens a sentence.
    pub fn sentences(&self) -> Vec<Range<usize>> {
        sentence_ranges(self.tokens.iter().map(|t| t.is_sent_start == Some(true)))
    }

    /// Entity spans decoded from the tokens' BILOU tags, never crossing
    /// sentence boundaries.
    pub fn entities(&self) -> Vec<EntitySpan> {
        let mut spans = Vec::new();
        for range in self.sentences() {
            let tags: Vec<BilouTag> = self.tokens[range.clone()]
                .iter()
                .map(|t| t.ent.clone().unwrap_or(BilouTag::Outside))
                .collect();
            spans.extend(
                crate::bilou::bilou_to_spans(&tags)
                    .into_iter()
                    .map(|s| EntitySpan::new(s.start + range.start, s.end + range.start, s.label)),
            );
        }
        spans
    }

    /// The tokens in `range` as a document of their own. Heads pointing
    /// outside the range are dropped together with their relation.
    pub fn slice(&self, range: Range<usize>) -> AnnotatedDoc {
        let tokens = self.tokens[range.clone()]
            .iter()
            .map(|t| {
                let mut t = t.clone();
                match t.head {
                    Some(Head::Token(h)) if range.contains(&h) => {
                        t.head = Some(Head::Token(h - range.start))
                    }
                    Some(Head::Token(_)) => {
                        t.head = None;
                        t.deprel = None;
                    }
                    _ => {}
                }
                t
            })
            .collect();
        AnnotatedDoc::from_tokens("", tokens)
    }

    /// Checks the structural invariants of the record.
    pub fn validate(&self) -> Result<()> {
        let mut rebuilt = self.leading_ws.clone();
        let mut offset = self.leading_ws.chars().count();
        for (i, token) in self.tokens.iter().enumerate() {
            if token.text.is_empty() {
                return Err(Error::Contract(format!("token {} is empty", i)));
            }
            if token.char_start != offset
                || token.char_end != offset + token.text.chars().count()
            {
                return Err(Error::Contract(format!(
                    "token {} has offsets {}..{}, expected start {}",
                    i, token.char_start, token.char_end, offset
                )));
            }
            if token.head.is_some() != token.deprel.is_some() {
                return Err(Error::Contract(format!(
                    "token {} must have both or neither of head and deprel",
                    i
                )));
            }
            if token.head == Some(Head::Token(i)) {
                return Err(Error::Contract(format!("token {} is its own head", i)));
            }
            if let Some(Head::Token(h)) = token.head {
                if h >= self.tokens.len() {
                    return Err(Error::Contract(format!("token {} has head {} out of range", i, h)));
                }
            }
            offset = token.char_end + token.trailing_ws.chars().count();
            rebuilt.push_str(&token.text);
            rebuilt.push_str(&token.trailing_ws);
        }
        if rebuilt != self.source_text {
            return Err(Error::Contract(
                "tokens and whitespace do not reproduce the source text".to_owned(),
            ));
        }
        if let Some(first) = self.tokens.first() {
            if first.is_sent_start != Some(true) {
                return Err(Error::Contract("token 0 must start a sentence".to_owned()));
            }
        }
        Ok(())
    }
}

/// Partitions `0..n` into maximal runs that start at flagged positions.
pub fn sentence_ranges(starts: impl IntoIterator<Item = bool>) -> Vec<Range<usize>> {
    let mut ranges = Vec::new();
    let mut begin = 0;
    let mut n = 0;
    for (i, start) in starts.into_iter().enumerate() {
        if start && i > 0 {
            ranges.push(begin..i);
            begin = i;
        }
        n = i + 1;
    }
    if n > 0 {
        ranges.push(begin..n);
    }
    ranges
}

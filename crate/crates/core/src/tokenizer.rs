//! Rule-based tokenization.
//!
//! Text is split on whitespace, then every chunk is peeled from both ends
//! with prefix and suffix rules until an exception or abbreviation matches
//! or no rule fires. There is no infix splitting: hyphenated suffixed forms
//! such as `2021-ben` stay whole.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::doc::{AnnotatedDoc, Token};
use crate::error::{Error, Result};

const DEFAULT_RULES: &str = include_str!("../data/hu_tokenizer.rules");

#[derive(Clone, Debug, PartialEq, Eq)]
enum ClassItem {
    Char(char),
    Range(char, char),
}

/// A literal string or a single-character class such as `[0-9%]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pattern {
    source: String,
    kind: PatternKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum PatternKind {
    Literal(String),
    Class(Vec<ClassItem>),
}

impl Pattern {
    pub fn parse(source: &str) -> std::result::Result<Self, String> {
        if source.is_empty() {
            return Err("empty pattern".to_owned());
        }
        let kind = match source
            .strip_prefix('[')
            .and_then(|s| s.strip_suffix(']'))
            .filter(|body| !body.is_empty())
        {
            Some(body) => PatternKind::Class(parse_class(body)?),
            None => PatternKind::Literal(source.to_owned()),
        };
        Ok(Pattern {
            source: source.to_owned(),
            kind,
        })
    }

    pub fn as_str(&self) -> &str {
        &self.source
    }

    fn class_matches(items: &[ClassItem], c: char) -> bool {
        items.iter().any(|item| match *item {
            ClassItem::Char(x) => x == c,
            ClassItem::Range(lo, hi) => lo <= c && c <= hi,
        })
    }

    /// Byte length of the match at the start of `s`.
    fn match_prefix(&self, s: &str) -> Option<usize> {
        match &self.kind {
            PatternKind::Literal(lit) => s.starts_with(lit.as_str()).then_some(lit.len()),
            PatternKind::Class(items) => s
                .chars()
                .next()
                .filter(|&c| Self::class_matches(items, c))
                .map(char::len_utf8),
        }
    }

    /// Byte length of the match at the end of `s`.
    fn match_suffix(&self, s: &str) -> Option<usize> {
        match &self.kind {
            PatternKind::Literal(lit) => s.ends_with(lit.as_str()).then_some(lit.len()),
            PatternKind::Class(items) => s
                .chars()
                .next_back()
                .filter(|&c| Self::class_matches(items, c))
                .map(char::len_utf8),
        }
    }
}

fn parse_class(body: &str) -> std::result::Result<Vec<ClassItem>, String> {
    let mut chars = Vec::new();
    let mut it = body.chars();
    while let Some(c) = it.next() {
        if c == '\\' {
            chars.push((it.next().ok_or("dangling escape in class")?, true));
        } else {
            chars.push((c, false));
        }
    }
    let mut items = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (c, _) = chars[i];
        if i + 2 < chars.len() && chars[i + 1] == ('-', false) {
            let hi = chars[i + 2].0;
            if hi < c {
                return Err(format!("inverted range {}-{}", c, hi));
            }
            items.push(ClassItem::Range(c, hi));
            i += 3;
        } else {
            items.push(ClassItem::Char(c));
            i += 1;
        }
    }
    Ok(items)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TokenizerRules {
    pub prefixes: Vec<Pattern>,
    pub suffixes: Vec<Pattern>,
    /// Chunks with a fixed split; the pieces concatenate back to the key.
    pub exceptions: BTreeMap<String, Vec<String>>,
    /// Period-terminated forms that are never split.
    pub abbreviations: BTreeSet<String>,
}

#[derive(Clone, Copy)]
enum Section {
    Prefix,
    Suffix,
    Abbrev,
    Exception,
}

impl TokenizerRules {
    /// Parses a rule file with `[prefix]`, `[suffix]`, `[abbrev]` and
    /// `[exception]` sections. Lines starting with `# ` are comments.
    pub fn parse(input: &str) -> Result<Self> {
        let mut rules = TokenizerRules::default();
        let mut section = None;
        for (idx, raw) in input.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.trim_end_matches(['\r', ' ']);
            if line.is_empty() || line.starts_with("# ") {
                continue;
            }
            match line {
                "[prefix]" => section = Some(Section::Prefix),
                "[suffix]" => section = Some(Section::Suffix),
                "[abbrev]" => section = Some(Section::Abbrev),
                "[exception]" => section = Some(Section::Exception),
                _ => match section {
                    None => return Err(Error::parse(lineno, "rule outside of a section")),
                    Some(Section::Prefix) => rules
                        .prefixes
                        .push(Pattern::parse(line).map_err(|e| Error::parse(lineno, e))?),
                    Some(Section::Suffix) => rules
                        .suffixes
                        .push(Pattern::parse(line).map_err(|e| Error::parse(lineno, e))?),
                    Some(Section::Abbrev) => {
                        if !line.ends_with('.') || line.chars().any(char::is_whitespace) {
                            return Err(Error::parse(
                                lineno,
                                format!("abbreviation {:?} must end in '.'", line),
                            ));
                        }
                        rules.abbreviations.insert(line.to_owned());
                    }
                    Some(Section::Exception) => {
                        let (chunk, pieces) = line.split_once('\t').ok_or_else(|| {
                            Error::parse(lineno, "exception needs chunk<TAB>tokens")
                        })?;
                        let pieces: Vec<String> =
                            pieces.split(' ').filter(|p| !p.is_empty()).map(str::to_owned).collect();
                        if pieces.concat() != chunk || chunk.is_empty() {
                            return Err(Error::parse(
                                lineno,
                                format!("exception pieces do not concatenate to {:?}", chunk),
                            ));
                        }
                        rules.exceptions.insert(chunk.to_owned(), pieces);
                    }
                },
            }
        }
        Ok(rules)
    }

    pub fn to_rule_file(&self) -> String {
        let mut out = String::from("[prefix]\n");
        for p in &self.prefixes {
            let _ = writeln!(out, "{}", p.as_str());
        }
        out.push_str("\n[suffix]\n");
        for p in &self.suffixes {
            let _ = writeln!(out, "{}", p.as_str());
        }
        out.push_str("\n[abbrev]\n");
        for a in &self.abbreviations {
            let _ = writeln!(out, "{}", a);
        }
        out.push_str("\n[exception]\n");
        for (chunk, pieces) in &self.exceptions {
            let _ = writeln!(out, "{}\t{}", chunk, pieces.join(" "));
        }
        out
    }

    /// Abbreviation lookup, case-insensitive on the first letter only.
    pub fn is_abbreviation(&self, chunk: &str) -> bool {
        if self.abbreviations.contains(chunk) {
            return true;
        }
        let mut chars = chunk.chars();
        let Some(first) = chars.next() else {
            return false;
        };
        let rest = chars.as_str();
        let toggled: String = if first.is_uppercase() {
            first.to_lowercase().collect()
        } else {
            first.to_uppercase().collect()
        };
        self.abbreviations.contains(&format!("{}{}", toggled, rest))
    }

    fn longest(patterns: &[Pattern], f: impl Fn(&Pattern) -> Option<usize>) -> Option<usize> {
        let mut best: Option<usize> = None;
        for p in patterns {
            if let Some(len) = f(p) {
                if best.is_none_or(|b| len > b) {
                    best = Some(len);
                }
            }
        }
        best
    }

    /// Splits one whitespace-free chunk into token slices.
    pub fn split_chunk<'a>(&'a self, chunk: &'a str) -> Vec<&'a str> {
        let mut front = Vec::new();
        let mut back = Vec::new();
        let mut rest = chunk;
        while !rest.is_empty() {
            if let Some(pieces) = self.exceptions.get(rest) {
                front.extend(pieces.iter().map(String::as_str));
                rest = "";
                break;
            }
            if self.is_abbreviation(rest) {
                front.push(rest);
                rest = "";
                break;
            }
            if let Some(len) = Self::longest(&self.prefixes, |p| p.match_prefix(rest)) {
                front.push(&rest[..len]);
                rest = &rest[len..];
                continue;
            }
            if let Some(len) = Self::longest(&self.suffixes, |p| p.match_suffix(rest)) {
                let cut = rest.len() - len;
                back.push(&rest[cut..]);
                rest = &rest[..cut];
                continue;
            }
            break;
        }
        if !rest.is_empty() {
            front.push(rest);
        }
        front.extend(back.into_iter().rev());
        front
    }
}

/// The shipped Hungarian rule set.
pub fn default_rules() -> TokenizerRules {
    TokenizerRules::parse(DEFAULT_RULES).expect("shipped tokenizer rules are valid")
}

pub fn tokenize(text: &str, rules: &TokenizerRules) -> AnnotatedDoc {
    let body = text.trim_start();
    let leading_ws = &text[..text.len() - body.len()];

    let mut tokens: Vec<Token> = Vec::new();
    let mut rest = body;
    while !rest.is_empty() {
        let chunk_end = rest.find(char::is_whitespace).unwrap_or(rest.len());
        let (chunk, after) = rest.split_at(chunk_end);
        let next = after.trim_start();
        let ws = &after[..after.len() - next.len()];

        let pieces = rules.split_chunk(chunk);
        let last = pieces.len() - 1;
        for (i, piece) in pieces.into_iter().enumerate() {
            tokens.push(Token::new(piece, if i == last { ws } else { "" }));
        }
        rest = next;
    }
    AnnotatedDoc::from_tokens(leading_ws, tokens)
}

//! BILOU span encoding.

use std::fmt;
use std::str::FromStr;

use crate::doc::EntitySpan;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BilouTag {
    Outside,
    Begin(String),
    Inside(String),
    Last(String),
    Unit(String),
}

impl BilouTag {
    pub fn label(&self) -> Option<&str> {
        match self {
            BilouTag::Outside => None,
            BilouTag::Begin(l) | BilouTag::Inside(l) | BilouTag::Last(l) | BilouTag::Unit(l) => {
                Some(l)
            }
        }
    }

    /// Whether a span is still open after this tag.
    pub fn is_open(&self) -> bool {
        matches!(self, BilouTag::Begin(_) | BilouTag::Inside(_))
    }

    /// Whether this tag closes an entity.
    pub fn completes_entity(&self) -> bool {
        matches!(self, BilouTag::Last(_) | BilouTag::Unit(_))
    }
}

/// Whether `next` may follow `prev` (`None` is the sequence start).
pub fn transition_allowed(prev: Option<&BilouTag>, next: &BilouTag) -> bool {
    match prev {
        Some(BilouTag::Begin(p)) | Some(BilouTag::Inside(p)) => match next {
            BilouTag::Inside(n) | BilouTag::Last(n) => n == p,
            _ => false,
        },
        _ => matches!(
            next,
            BilouTag::Outside | BilouTag::Begin(_) | BilouTag::Unit(_)
        ),
    }
}

/// Whether a complete sequence obeys the BILOU grammar.
pub fn is_valid_sequence(tags: &[BilouTag]) -> bool {
    let mut prev = None;
    for tag in tags {
        if !transition_allowed(prev, tag) {
            return false;
        }
        prev = Some(tag);
    }
    !prev.is_some_and(BilouTag::is_open)
}

impl fmt::Display for BilouTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BilouTag::Outside => f.write_str("O"),
            BilouTag::Begin(l) => write!(f, "B-{}", l),
            BilouTag::Inside(l) => write!(f, "I-{}", l),
            BilouTag::Last(l) => write!(f, "L-{}", l),
            BilouTag::Unit(l) => write!(f, "U-{}", l),
        }
    }
}

impl FromStr for BilouTag {
    type Err = String;

    /// Accepts `O` and `X-LABEL` with X in B, I, L, U, and E/S as aliases of L/U.
    fn from_str(s: &str) -> Result<Self, String> {
        if s == "O" {
            return Ok(BilouTag::Outside);
        }
        let (prefix, label) = s
            .split_once('-')
            .ok_or_else(|| format!("unknown tag shape: {:?}", s))?;
        if label.is_empty() {
            return Err(format!("tag without label: {:?}", s));
        }
        let label = label.to_owned();
        match prefix {
            "B" => Ok(BilouTag::Begin(label)),
            "I" => Ok(BilouTag::Inside(label)),
            "L" | "E" => Ok(BilouTag::Last(label)),
            "U" | "S" => Ok(BilouTag::Unit(label)),
            _ => Err(format!("unknown tag shape: {:?}", s)),
        }
    }
}

/// Encodes sorted, non-overlapping spans over `n` tokens.
pub fn spans_to_bilou(spans: &[EntitySpan], n: usize) -> Vec<BilouTag> {
    let mut tags = vec![BilouTag::Outside; n];
    for span in spans {
        debug_assert!(span.start < span.end && span.end <= n);
        if span.end - span.start == 1 {
            tags[span.start] = BilouTag::Unit(span.label.clone());
            continue;
        }
        tags[span.start] = BilouTag::Begin(span.label.clone());
        for tag in &mut tags[span.start + 1..span.end - 1] {
            *tag = BilouTag::Inside(span.label.clone());
        }
        tags[span.end - 1] = BilouTag::Last(span.label.clone());
    }
    tags
}

/// Decodes tags into spans. Total over arbitrary input: an I/L without a
/// matching open span opens one, and an open span is closed at the token
/// before an O, B, U or the end. IOB2 sequences decode correctly as well.
pub fn bilou_to_spans(tags: &[BilouTag]) -> Vec<EntitySpan> {
    let mut spans = Vec::new();
    let mut open: Option<(usize, &str)> = None;

    let close = |open: &mut Option<(usize, &str)>, end: usize, spans: &mut Vec<EntitySpan>| {
        if let Some((start, label)) = open.take() {
            spans.push(EntitySpan::new(start, end, label));
        }
    };

    for (i, tag) in tags.iter().enumerate() {
        match tag {
            BilouTag::Outside => close(&mut open, i, &mut spans),
            BilouTag::Begin(l) => {
                close(&mut open, i, &mut spans);
                open = Some((i, l));
            }
            BilouTag::Inside(l) => match open {
                Some((_, cur)) if cur == l => {}
                _ => {
                    close(&mut open, i, &mut spans);
                    open = Some((i, l));
                }
            },
            BilouTag::Last(l) => {
                match open {
                    Some((_, cur)) if cur == l => {}
                    _ => {
                        close(&mut open, i, &mut spans);
                        open = Some((i, l));
                    }
                }
                close(&mut open, i + 1, &mut spans);
            }
            BilouTag::Unit(l) => {
                close(&mut open, i, &mut spans);
                spans.push(EntitySpan::new(i, i + 1, l.as_str()));
            }
        }
    }
    close(&mut open, tags.len(), &mut spans);
    spans
}

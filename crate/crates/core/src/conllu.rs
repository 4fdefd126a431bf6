//! CoNLL-U reading and writing.
//!
//! Documents are split at `# newdoc` comments; without any, a file is a
//! single document. Sentence boundaries become `is_sent_start` flags and
//! heads are stored as document-level token indices. Token whitespace is
//! taken from `SpaceAfter=No`/`SpacesAfter=` in MISC, then from the
//! `# text =` comment, and defaults to a single space.

use std::fmt::Write as _;

use crate::doc::{AnnotatedDoc, Head, MorphFeats, Token};
use crate::error::{Error, Result};

struct Row {
    form: String,
    lemma: Option<String>,
    upos: Option<String>,
    feats: Option<MorphFeats>,
    head: Option<usize>,
    deprel: Option<String>,
    /// Whitespace after the token if MISC states it.
    space_after: Option<String>,
    line: usize,
}

#[derive(Default)]
struct Sentence {
    text: Option<String>,
    rows: Vec<Row>,
}

pub fn read_conllu(input: &str) -> Result<Vec<AnnotatedDoc>> {
    let mut docs = Vec::new();
    let mut doc_sentences: Vec<Sentence> = Vec::new();
    let mut sentence = Sentence::default();

    for (idx, raw) in input.split('\n').enumerate() {
        let lineno = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            if !sentence.rows.is_empty() {
                doc_sentences.push(std::mem::take(&mut sentence));
            } else {
                sentence.text = None;
            }
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let comment = comment.trim_start();
            if comment == "newdoc" || comment.starts_with("newdoc ") {
                if !sentence.rows.is_empty() {
                    doc_sentences.push(std::mem::take(&mut sentence));
                }
                if !doc_sentences.is_empty() {
                    docs.push(build_doc(std::mem::take(&mut doc_sentences))?);
                }
            } else if let Some(text) = comment.strip_prefix("text =") {
                sentence.text = Some(text.trim().to_owned());
            }
            continue;
        }
        let row = parse_row(line, lineno, sentence.rows.len() + 1)?;
        sentence.rows.push(row);
    }
    if !sentence.rows.is_empty() {
        doc_sentences.push(sentence);
    }
    if !doc_sentences.is_empty() {
        docs.push(build_doc(doc_sentences)?);
    }
    Ok(docs)
}

fn parse_row(line: &str, lineno: usize, expected_id: usize) -> Result<Row> {
    let cols: Vec<&str> = line.split('\t').collect();
    if cols.len() != 10 {
        return Err(Error::parse(
            lineno,
            format!("expected 10 tab-separated columns, found {}", cols.len()),
        ));
    }
    let id = cols[0];
    if id.contains('-') {
        return Err(Error::Unsupported {
            line: lineno,
            what: format!("multiword token range {:?}", id),
        });
    }
    if id.contains('.') {
        return Err(Error::Unsupported {
            line: lineno,
            what: format!("empty node {:?}", id),
        });
    }
    let id: usize = id
        .parse()
        .map_err(|_| Error::parse(lineno, format!("invalid token id {:?}", id)))?;
    if id != expected_id {
        return Err(Error::parse(
            lineno,
            format!("token id {} out of sequence, expected {}", id, expected_id),
        ));
    }
    if cols[1].is_empty() {
        return Err(Error::parse(lineno, "empty FORM"));
    }

    let opt = |s: &str| (s != "_" && !s.is_empty()).then(|| s.to_owned());
    // An empty FEATS column is the empty bundle on a tagged token.
    let feats = match cols[5] {
        "_" if cols[3] == "_" => None,
        "_" => Some(MorphFeats::new()),
        s => Some(s.parse::<MorphFeats>().map_err(|e| Error::parse(lineno, e))?),
    };
    let head = match cols[6] {
        "_" => None,
        s => Some(
            s.parse::<usize>()
                .map_err(|_| Error::parse(lineno, format!("invalid HEAD {:?}", s)))?,
        ),
    };
    let deprel = opt(cols[7]);
    if head.is_some() != deprel.is_some() {
        return Err(Error::parse(lineno, "HEAD and DEPREL must be both set or both unset"));
    }
    if head == Some(id) {
        return Err(Error::parse(lineno, "token is its own head"));
    }

    let mut space_after = None;
    for item in cols[9].split('|') {
        if item == "SpaceAfter=No" {
            space_after = Some(String::new());
        } else if let Some(spaces) = item.strip_prefix("SpacesAfter=") {
            space_after = Some(unescape_spaces(spaces));
        }
    }

    Ok(Row {
        form: cols[1].to_owned(),
        lemma: opt(cols[2]),
        upos: opt(cols[3]),
        feats,
        head,
        deprel,
        space_after,
        line: lineno,
    })
}

/// Aligns token forms against the sentence text, returning the whitespace
/// following every token but the last.
fn align_text(text: &str, rows: &[Row]) -> Option<Vec<String>> {
    let mut rest = text.trim_start();
    let mut gaps = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        rest = rest.strip_prefix(row.form.as_str())?;
        if i + 1 < rows.len() {
            let trimmed = rest.trim_start();
            gaps.push(rest[..rest.len() - trimmed.len()].to_owned());
            rest = trimmed;
        }
    }
    rest.trim().is_empty().then_some(gaps)
}

fn build_doc(sentences: Vec<Sentence>) -> Result<AnnotatedDoc> {
    let mut tokens = Vec::new();
    for sentence in sentences {
        let offset = tokens.len();
        let n = sentence.rows.len();
        let gaps = sentence
            .text
            .as_deref()
            .and_then(|text| align_text(text, &sentence.rows));
        for (i, row) in sentence.rows.into_iter().enumerate() {
            let trailing_ws = match (&row.space_after, &gaps) {
                (Some(ws), _) => ws.clone(),
                (None, Some(gaps)) if i + 1 < n => gaps[i].clone(),
                _ => " ".to_owned(),
            };
            let head = match row.head {
                None => None,
                Some(0) => Some(Head::Root),
                Some(h) if h <= n => Some(Head::Token(offset + h - 1)),
                Some(h) => {
                    return Err(Error::parse(
                        row.line,
                        format!("HEAD {} outside sentence of {} tokens", h, n),
                    ))
                }
            };
            tokens.push(Token {
                text: row.form,
                trailing_ws,
                is_sent_start: Some(i == 0),
                upos: row.upos,
                feats: row.feats,
                lemma: row.lemma,
                head,
                deprel: row.deprel,
                ..Token::default()
            });
        }
    }
    Ok(AnnotatedDoc::from_tokens("", tokens))
}

fn escape_spaces(ws: &str) -> String {
    let mut out = String::new();
    for c in ws.chars() {
        match c {
            ' ' => out.push_str("\\s"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\\' => out.push_str("\\\\"),
            '|' => out.push_str("\\p"),
            c => out.push(c),
        }
    }
    out
}

fn unescape_spaces(s: &str) -> String {
    let mut out = String::new();
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('s') => out.push(' '),
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some('p') => out.push('|'),
            Some(other) => out.push(other),
            None => out.push('\\'),
        }
    }
    out
}

/// Serializes documents. Heads pointing outside their sentence cannot be
/// represented and are written as unset.
pub fn write_conllu(docs: &[AnnotatedDoc]) -> String {
    let mut out = String::new();
    for doc in docs.iter().filter(|d| !d.is_empty()) {
        out.push_str("# newdoc\n");
        for range in doc.sentences() {
            let sent = &doc.tokens[range.clone()];
            let mut text = String::new();
            for (i, tok) in sent.iter().enumerate() {
                text.push_str(&tok.text);
                if i + 1 < sent.len() {
                    text.push_str(&tok.trailing_ws);
                }
            }
            let text: String = text
                .chars()
                .map(|c| if c == '\n' || c == '\r' { ' ' } else { c })
                .collect();
            let _ = writeln!(out, "# text = {}", text);

            for (i, tok) in sent.iter().enumerate() {
                let head = match tok.head {
                    Some(Head::Root) => Some(0),
                    Some(Head::Token(h)) if range.contains(&h) => Some(h - range.start + 1),
                    _ => None,
                };
                let (head, deprel) = match (head, &tok.deprel) {
                    (Some(h), Some(rel)) => (h.to_string(), rel.as_str()),
                    _ => ("_".to_owned(), "_"),
                };
                let misc = match tok.trailing_ws.as_str() {
                    " " => "_".to_owned(),
                    "" => "SpaceAfter=No".to_owned(),
                    ws => format!("SpacesAfter={}", escape_spaces(ws)),
                };
                let _ = writeln!(
                    out,
                    "{}\t{}\t{}\t{}\t_\t{}\t{}\t{}\t_\t{}",
                    i + 1,
                    tok.text,
                    tok.lemma.as_deref().unwrap_or("_"),
                    tok.upos.as_deref().unwrap_or("_"),
                    tok.feats
                        .as_ref()
                        .map_or_else(|| "_".to_owned(), |f| f.to_string()),
                    head,
                    deprel,
                    misc
                );
            }
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const FIXTURE: &str = "# newdoc id = d1
# sent_id = 1
# text = Péter alszik.
1\tPéter\tPéter\tPROPN\t_\tCase=Nom|Number=Sing\t2\tnsubj\t_\t_
2\talszik\talszik\tVERB\t_\tMood=Ind|Number=Sing|Person=3|Tense=Pres|VerbForm=Fin\t0\troot\t_\tSpaceAfter=No
3\t.\t.\tPUNCT\t_\t_\t2\tpunct\t_\t_

# sent_id = 2
# text = Mari is.
1\tMari\tMari\tPROPN\t_\tCase=Nom|Number=Sing\t0\troot\t_\t_
2\tis.\t_\t_\t_\t_\t_\t_\t_\t_

";

    #[test]
    fn reads_fixture_field_by_field() {
        let docs = read_conllu(FIXTURE).unwrap();
        assert_eq!(docs.len(), 1);
        let doc = &docs[0];
        assert_eq!(doc.len(), 5);
        let starts: Vec<_> = doc.tokens.iter().map(|t| t.is_sent_start).collect();
        assert_eq!(
            starts,
            vec![Some(true), Some(false), Some(false), Some(true), Some(false)]
        );
        assert_eq!(doc.source_text, "Péter alszik. Mari is. ");
        let t0 = &doc.tokens[0];
        assert_eq!(t0.text, "Péter");
        assert_eq!(t0.lemma.as_deref(), Some("Péter"));
        assert_eq!(t0.upos.as_deref(), Some("PROPN"));
        assert_eq!(t0.feats.as_ref().unwrap().get("Case"), Some("Nom"));
        assert_eq!(t0.head, Some(Head::Token(1)));
        assert_eq!(t0.deprel.as_deref(), Some("nsubj"));
        assert_eq!(doc.tokens[1].head, Some(Head::Root));
        assert_eq!(doc.tokens[1].trailing_ws, "");
        assert_eq!(doc.tokens[2].head, Some(Head::Token(1)));
        assert_eq!(doc.tokens[3].head, Some(Head::Root));
        let t4 = &doc.tokens[4];
        assert_eq!((t4.lemma.as_ref(), t4.upos.as_ref(), t4.head), (None, None, None));
        assert_eq!((t4.char_start, t4.char_end), (19, 22));
        doc.validate().unwrap();
    }

    #[test]
    fn round_trip_fixture() {
        let docs = read_conllu(FIXTURE).unwrap();
        let again = read_conllu(&write_conllu(&docs)).unwrap();
        assert_eq!(docs, again);
    }

    #[test]
    fn empty_input() {
        assert!(read_conllu("").unwrap().is_empty());
        assert!(read_conllu("\n\n").unwrap().is_empty());
        assert_eq!(write_conllu(&[]), "");
    }

    #[test]
    fn bare_token_line() {
        let doc = AnnotatedDoc::from_tokens("", vec![Token::new("foo", " ")]);
        let out = write_conllu(&[doc]);
        assert!(out.contains("\n1\tfoo\t_\t_\t_\t_\t_\t_\t_\t_\n"), "{}", out);
    }

    #[test]
    fn space_after_no() {
        let doc = AnnotatedDoc::from_tokens("", vec![Token::new("a", ""), Token::new(".", "\n\t")]);
        let out = write_conllu(&[doc.clone()]);
        assert!(out.contains("1\ta\t_\t_\t_\t_\t_\t_\t_\tSpaceAfter=No\n"));
        assert!(out.contains("SpacesAfter=\\n\\t"));
        assert_eq!(read_conllu(&out).unwrap()[0].source_text, doc.source_text);
    }

    #[test]
    fn nine_columns_is_error_with_line() {
        let input = "# text = a\n1\ta\t_\t_\t_\t_\t_\t_\t_\n";
        match read_conllu(input) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {:?}", other),
        }
    }

    #[test]
    fn multiword_and_empty_nodes_rejected() {
        let mwt = "1-2\tvagyok\t_\t_\t_\t_\t_\t_\t_\t_\n";
        assert!(matches!(read_conllu(mwt), Err(Error::Unsupported { line: 1, .. })));
        let empty = "1\ta\t_\t_\t_\t_\t0\troot\t_\t_\n1.1\tb\t_\t_\t_\t_\t_\t_\t_\t_\n";
        assert!(matches!(read_conllu(empty), Err(Error::Unsupported { line: 2, .. })));
    }

    #[test]
    fn newdoc_splits_documents() {
        let input = "# newdoc\n1\ta\t_\t_\t_\t_\t_\t_\t_\t_\n\n# newdoc\n1\tb\t_\t_\t_\t_\t_\t_\t_\t_\n\n";
        let docs = read_conllu(input).unwrap();
        assert_eq!(docs.len(), 2);
        assert_eq!(docs[1].tokens[0].text, "b");
    }
}

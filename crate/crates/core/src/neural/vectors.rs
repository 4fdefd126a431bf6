//! Pretrained static word vectors in the textual `count dim` format.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::BufRead;

use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct StaticVectors {
    dim: usize,
    words: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<f32>,
    /// Try the exact form before the lowercased one.
    pub case_fallback: bool,
}

impl StaticVectors {
    /// An empty table: every lookup misses and yields zeros.
    pub fn empty(dim: usize) -> Self {
        StaticVectors {
            dim,
            ..StaticVectors::default()
        }
    }

    pub fn from_parts(dim: usize, words: Vec<String>, data: Vec<f32>) -> Result<Self> {
        if data.len() != words.len() * dim {
            return Err(Error::Contract(format!(
                "{} words of width {} need {} values, got {}",
                words.len(),
                dim,
                words.len() * dim,
                data.len()
            )));
        }
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            index.entry(w.clone()).or_insert(i);
        }
        Ok(StaticVectors {
            dim,
            words,
            index,
            data,
            case_fallback: false,
        })
    }

    /// Reads the header line `count dim` followed by `word v1 … vdim` lines.
    pub fn read_text<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::parse(1, "missing header line"))??;
        let mut parts = header.split_whitespace();
        let mut next_num = |what: &str| -> Result<usize> {
            parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::parse(1, format!("invalid {} in header", what)))
        };
        let count = next_num("vector count")?;
        let dim = next_num("dimension")?;

        let mut words = Vec::with_capacity(count);
        let mut data = Vec::with_capacity(count * dim);
        for (idx, line) in lines.enumerate() {
            let lineno = idx + 2;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.trim_end().split(' ');
            let word = fields.next().filter(|w| !w.is_empty()).ok_or_else(|| Error::parse(lineno, "missing word"))?;
            let before = data.len();
            for field in fields.filter(|f| !f.is_empty()) {
                let v: f32 = field
                    .parse()
                    .map_err(|_| Error::parse(lineno, format!("invalid component {:?}", field)))?;
                data.push(v);
            }
            if data.len() - before != dim {
                return Err(Error::parse(
                    lineno,
                    format!("expected {} components, found {}", dim, data.len() - before),
                ));
            }
            words.push(word.to_owned());
        }
        if words.len() != count {
            return Err(Error::parse(
                1,
                format!("header announces {} vectors, file has {}", count, words.len()),
            ));
        }
        StaticVectors::from_parts(dim, words, data)
    }

    pub fn write_text(&self) -> String {
        let mut out = format!("{} {}\n", self.words.len(), self.dim);
        for (i, w) in self.words.iter().enumerate() {
            out.push_str(w);
            for v in &self.data[i * self.dim..(i + 1) * self.dim] {
                let _ = write!(out, " {}", v);
            }
            out.push('\n');
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Looks up the lowercased token, or the exact form first when
    /// `case_fallback` is set.
    pub fn lookup(&self, text: &str) -> Option<&[f32]> {
        if self.case_fallback {
            if let Some(&i) = self.index.get(text) {
                return Some(self.row(i));
            }
        }
        self.index.get(&text.to_lowercase()).map(|&i| self.row(i))
    }
}

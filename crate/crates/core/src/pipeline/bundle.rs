//! On-disk model layout.
//!
//! ```text
//! manifest.txt        key = value lines
//! config.toml         training configuration snapshot
//! tokenizer.rules
//! vectors.txt         static vectors
//! labels/*.txt        one label per line
//! syntax/*.bin        encoder, tagger and parser parameters
//! ner/*.bin           entity recognizer parameters
//! lemmas.tsv          lemmatizer rule dump
//! ```
//!
//! A parameter blob is three ASCII lines (magic, name, rank and dims)
//! followed by the row-major values as little-endian `f32`.

use std::collections::BTreeMap;
use std::fs;
use std::io::BufReader;
use std::path::Path;
use std::sync::Arc;

use ndarray::Array2;

use super::Pipeline;
use crate::error::{Error, Result};
use crate::lemmatizer::Lemmatizer;
use crate::ner::NerModel;
use crate::neural::{EncoderConfig, HasParams, Param, StaticVectors, Tok2Vec, HASH_ID};
use crate::parser::ParserModel;
use crate::syntax::{init_rng, SyntaxModel};
use crate::tagger::Tagger;
use crate::tokenizer::TokenizerRules;

pub const MAGIC: &str = "hunlp-model";
pub const FORMAT_VERSION: u32 = 1;
const BLOB_MAGIC: &str = "hunlp-param";

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, contents)?;
    Ok(())
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::load(path, e.to_string()))
}

pub fn encode_blob(param: &Param) -> Vec<u8> {
    let (rows, cols) = param.shape();
    let mut out = format!("{}\n{}\n2 {} {}\n", BLOB_MAGIC, param.name, rows, cols).into_bytes();
    out.reserve(rows * cols * 4);
    for &v in param.value.iter() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

/// Parses a blob, checking its name and shape against `expected`.
pub fn decode_blob(bytes: &[u8], expected: &Param, file: &Path) -> Result<Array2<f64>> {
    let err = |msg: String| Error::load(file, msg);
    let mut header = Vec::new();
    let mut pos = 0;
    for _ in 0..3 {
        let end = bytes[pos..]
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| err("truncated header".to_owned()))?;
        header.push(
            std::str::from_utf8(&bytes[pos..pos + end]).map_err(|_| err("header is not UTF-8".to_owned()))?,
        );
        pos += end + 1;
    }
    if header[0] != BLOB_MAGIC {
        return Err(err(format!("bad magic {:?}", header[0])));
    }
    if header[1] != expected.name {
        return Err(err(format!("holds {:?}, expected {:?}", header[1], expected.name)));
    }
    let dims: Vec<usize> = header[2]
        .split(' ')
        .map(|d| d.parse().map_err(|_| err(format!("invalid dimensions {:?}", header[2]))))
        .collect::<Result<_>>()?;
    let (rows, cols) = expected.shape();
    if dims != [2, rows, cols] {
        return Err(err(format!(
            "dimensions {:?} do not match the expected {}×{}",
            &dims[1..],
            rows,
            cols
        )));
    }
    let data = &bytes[pos..];
    if data.len() != rows * cols * 4 {
        return Err(err(format!(
            "expected {} bytes of data, found {}",
            rows * cols * 4,
            data.len()
        )));
    }
    let values = data
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    Ok(Array2::from_shape_vec((rows, cols), values).expect("length checked"))
}

fn save_params(params: Vec<&Param>, dir: &Path) -> Result<()> {
    for p in params {
        write(&dir.join(format!("{}.bin", p.name)), encode_blob(p))?;
    }
    Ok(())
}

fn load_params(params: Vec<&mut Param>, dir: &Path) -> Result<()> {
    for p in params {
        let file = dir.join(format!("{}.bin", p.name));
        let bytes = fs::read(&file).map_err(|e| Error::load(&file, e.to_string()))?;
        p.value = decode_blob(&bytes, p, &file)?;
    }
    Ok(())
}

fn label_file(labels: &[String]) -> String {
    labels.iter().map(|l| format!("{}\n", l)).collect()
}

fn read_labels(path: &Path) -> Result<Vec<String>> {
    Ok(read(path)?.lines().map(str::to_owned).collect())
}

fn encoder_entries(config: &EncoderConfig) -> Vec<(String, String)> {
    [
        ("static_dim", config.static_dim),
        ("norm_rows", config.norm_rows),
        ("affix_rows", config.affix_rows),
        ("width", config.width),
        ("depth", config.depth),
        ("pieces", config.pieces),
        ("prefix_len", config.prefix_len),
        ("suffix_len", config.suffix_len),
    ]
    .into_iter()
    .map(|(k, v)| (format!("encoder.{}", k), v.to_string()))
    .collect()
}

impl Pipeline {
    /// Writes the model into `dir`, creating it if needed.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut components = vec!["tagger"];
        if self.syntax.parser.is_some() {
            components.push("parser");
        }
        if self.lemmatizer.is_some() {
            components.push("lemmatizer");
        }
        if self.ner.is_some() {
            components.push("ner");
        }
        let mut manifest = vec![
            ("magic".to_owned(), MAGIC.to_owned()),
            ("format_version".to_owned(), FORMAT_VERSION.to_string()),
            ("hash_id".to_owned(), HASH_ID.to_owned()),
            ("seed".to_owned(), self.seed.to_string()),
            ("components".to_owned(), components.join(" ")),
            ("config".to_owned(), "config.toml".to_owned()),
        ];
        manifest.extend(encoder_entries(self.syntax.tok2vec.config()));
        let vectors = self.syntax.tok2vec.vectors();
        manifest.push(("vectors.count".to_owned(), vectors.len().to_string()));
        manifest.push(("vectors.case_fallback".to_owned(), vectors.case_fallback.to_string()));
        let text: String = manifest
            .iter()
            .map(|(k, v)| format!("{} = {}\n", k, v))
            .collect();
        write(&dir.join("manifest.txt"), text)?;
        write(&dir.join("config.toml"), &self.config_snapshot)?;
        write(&dir.join("tokenizer.rules"), self.rules.to_rule_file())?;
        write(&dir.join("vectors.txt"), vectors.write_text())?;

        let tagger = &self.syntax.tagger;
        write(&dir.join("labels/upos.txt"), label_file(tagger.upos.labels()))?;
        write(&dir.join("labels/feats.txt"), label_file(tagger.feats.labels()))?;
        save_params(self.syntax.params(), &dir.join("syntax"))?;
        if let Some(parser) = &self.syntax.parser {
            write(&dir.join("labels/deprel.txt"), label_file(parser.labels()))?;
        }
        if let Some(lemmatizer) = &self.lemmatizer {
            write(&dir.join("lemmas.tsv"), lemmatizer.dump())?;
        }
        if let Some(ner) = &self.ner {
            write(&dir.join("labels/entity.txt"), label_file(ner.classes()))?;
            save_params(ner.params(), &dir.join("ner"))?;
        }
        Ok(())
    }

    /// Reads a model written by [`Pipeline::save`].
    pub fn load(dir: &Path) -> Result<Self> {
        let manifest_path = dir.join("manifest.txt");
        let manifest = parse_manifest(&read(&manifest_path)?, &manifest_path)?;
        let get = |key: &str| -> Result<&str> {
            manifest
                .get(key)
                .map(String::as_str)
                .ok_or_else(|| Error::load(&manifest_path, format!("missing key {:?}", key)))
        };
        let number = |key: &str| -> Result<u64> {
            get(key)?
                .parse()
                .map_err(|_| Error::load(&manifest_path, format!("{} is not a number", key)))
        };
        if get("magic")? != MAGIC {
            return Err(Error::load(&manifest_path, "not a model manifest (bad magic)"));
        }
        if number("format_version")? != u64::from(FORMAT_VERSION) {
            return Err(Error::load(
                &manifest_path,
                format!("format version {} is not supported", get("format_version")?),
            ));
        }
        if get("hash_id")? != HASH_ID {
            return Err(Error::load(
                &manifest_path,
                format!("feature hash {:?} differs from this build's {:?}", get("hash_id")?, HASH_ID),
            ));
        }
        let size = |key: &str| number(&format!("encoder.{}", key)).map(|v| v as usize);
        let encoder = EncoderConfig {
            static_dim: size("static_dim")?,
            norm_rows: size("norm_rows")?,
            affix_rows: size("affix_rows")?,
            width: size("width")?,
            depth: size("depth")?,
            pieces: size("pieces")?,
            prefix_len: size("prefix_len")?,
            suffix_len: size("suffix_len")?,
        };
        let components: Vec<&str> = get("components")?.split(' ').collect();
        let seed = number("seed")?;

        let vectors_path = dir.join("vectors.txt");
        let file = fs::File::open(&vectors_path).map_err(|e| Error::load(&vectors_path, e.to_string()))?;
        let mut vectors = StaticVectors::read_text(BufReader::new(file))
            .map_err(|e| Error::load(&vectors_path, e.to_string()))?;
        if vectors.dim() != encoder.static_dim || vectors.len() as u64 != number("vectors.count")? {
            return Err(Error::load(&vectors_path, "vector count or width disagrees with the manifest"));
        }
        vectors.case_fallback = get("vectors.case_fallback")? == "true";
        let vectors = Arc::new(vectors);

        let rules_path = dir.join("tokenizer.rules");
        let rules = TokenizerRules::parse(&read(&rules_path)?)
            .map_err(|e| Error::load(&rules_path, e.to_string()))?;

        let mut rng = init_rng(0);
        let tok2vec = Tok2Vec::new(encoder, vectors, &mut rng)
            .map_err(|e| Error::load(&manifest_path, e.to_string()))?;
        let width = tok2vec.width();
        let tagger = Tagger::with_labels(
            read_labels(&dir.join("labels/upos.txt"))?,
            read_labels(&dir.join("labels/feats.txt"))?,
            width,
        );
        let parser = if components.contains(&"parser") {
            let labels = read_labels(&dir.join("labels/deprel.txt"))?;
            let pieces = tok2vec.config().pieces;
            Some(ParserModel::new(labels, width, width, pieces, &mut rng))
        } else {
            None
        };
        let mut syntax = SyntaxModel {
            tok2vec,
            tagger,
            parser,
        };
        load_params(syntax.params_mut(), &dir.join("syntax"))?;

        let lemmatizer = if components.contains(&"lemmatizer") {
            let path = dir.join("lemmas.tsv");
            Some(Lemmatizer::from_dump(&read(&path)?).map_err(|e| Error::load(&path, e.to_string()))?)
        } else {
            None
        };
        let ner = if components.contains(&"ner") {
            let classes = read_labels(&dir.join("labels/entity.txt"))?;
            let mut ner = NerModel::new(syntax.tok2vec.clone(), classes, 0);
            load_params(ner.params_mut(), &dir.join("ner"))?;
            Some(ner)
        } else {
            None
        };
        let config_path = dir.join(get("config")?);
        Ok(Pipeline {
            rules,
            syntax,
            lemmatizer,
            ner,
            seed,
            config_snapshot: read(&config_path)?,
        })
    }
}

fn parse_manifest(text: &str, path: &Path) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once(" = ")
            .ok_or_else(|| Error::load(path, format!("line {}: expected 'key = value'", i + 1)))?;
        out.insert(k.trim().to_owned(), v.trim().to_owned());
    }
    Ok(out)
}

//! Token embedding and contextual encoding.
//!
//! Each token is embedded as its static vector concatenated with four
//! hashed 64-wide embeddings (lowercase form, prefix, suffix, shape). The
//! encoder projects this to width `W` and applies a stack of window-3
//! convolutions, each followed by maxout pooling and a residual addition.

use std::sync::Arc;

use ndarray::{s, Array2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::hash::feature_hash;
use super::ops::{affine, maxout, maxout_backward, sum_rows, unwindow, window};
use super::param::{HasParams, Param};
use super::shape::shape_of;
use super::vectors::StaticVectors;
use crate::error::{Error, Result};

/// Width of every hashed feature embedding.
pub const HASH_WIDTH: usize = 64;
pub const FEATURE_TABLES: [&str; 4] = ["NORM", "PREFIX", "SUFFIX", "SHAPE"];

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderConfig {
    pub static_dim: usize,
    pub norm_rows: usize,
    /// Rows of the PREFIX, SUFFIX and SHAPE tables.
    pub affix_rows: usize,
    pub width: usize,
    pub depth: usize,
    pub pieces: usize,
    pub prefix_len: usize,
    pub suffix_len: usize,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            static_dim: 300,
            norm_rows: 4096,
            affix_rows: 1024,
            width: 128,
            depth: 4,
            pieces: 3,
            prefix_len: 1,
            suffix_len: 3,
        }
    }
}

impl EncoderConfig {
    pub fn input_width(&self) -> usize {
        self.static_dim + FEATURE_TABLES.len() * HASH_WIDTH
    }
}

/// The four hashed feature tables.
#[derive(Clone, Debug)]
pub struct HashEmbeddings {
    pub tables: [Param; 4],
    prefix_len: usize,
    suffix_len: usize,
}

impl HashEmbeddings {
    pub fn new<R: Rng>(config: &EncoderConfig, rng: &mut R) -> Self {
        let rows = [config.norm_rows, config.affix_rows, config.affix_rows, config.affix_rows];
        let tables = std::array::from_fn(|i| {
            Param::uniform(
                format!("tok2vec.embed.{}", FEATURE_TABLES[i].to_lowercase()),
                rows[i],
                HASH_WIDTH,
                0.1,
                rng,
            )
        });
        HashEmbeddings {
            tables,
            prefix_len: config.prefix_len,
            suffix_len: config.suffix_len,
        }
    }

    /// The NORM, PREFIX, SUFFIX and SHAPE feature strings of a token.
    pub fn features(&self, text: &str) -> [String; 4] {
        let lower = text.to_lowercase();
        let n = lower.chars().count();
        let prefix: String = lower.chars().take(self.prefix_len).collect();
        let suffix: String = lower.chars().skip(n.saturating_sub(self.suffix_len)).collect();
        [lower, prefix, suffix, shape_of(text)]
    }

    /// Table rows of the token's four features.
    pub fn rows(&self, text: &str) -> [usize; 4] {
        let feats = self.features(text);
        std::array::from_fn(|i| {
            (feature_hash(FEATURE_TABLES[i], &feats[i]) % self.tables[i].value.nrows() as u64)
                as usize
        })
    }
}

#[derive(Clone, Debug)]
struct ConvLayer {
    w: Param,
    b: Param,
}

/// Intermediate values kept for the backward pass.
pub struct EncoderCache {
    rows: Vec<[usize; 4]>,
    input: Array2<f64>,
    /// Inverted-dropout multipliers applied to the input, if any.
    keep: Option<Array2<f64>>,
    windows: Vec<Array2<f64>>,
    which: Vec<Vec<u8>>,
}

#[derive(Clone, Debug)]
pub struct Tok2Vec {
    config: EncoderConfig,
    vectors: Arc<StaticVectors>,
    pub embed: HashEmbeddings,
    proj_w: Param,
    proj_b: Param,
    layers: Vec<ConvLayer>,
}

impl Tok2Vec {
    pub fn new<R: Rng>(
        config: EncoderConfig,
        vectors: Arc<StaticVectors>,
        rng: &mut R,
    ) -> Result<Self> {
        if vectors.dim() != config.static_dim {
            return Err(Error::Contract(format!(
                "static vectors have width {}, encoder expects {}",
                vectors.dim(),
                config.static_dim
            )));
        }
        if config.pieces == 0 || config.pieces > u8::MAX as usize || config.width == 0 {
            return Err(Error::Config("encoder width and pieces must be positive".to_owned()));
        }
        let embed = HashEmbeddings::new(&config, rng);
        let w = config.width;
        let proj_w = Param::glorot("tok2vec.proj.w", config.input_width(), w, rng);
        let proj_b = Param::zeros("tok2vec.proj.b", 1, w);
        let layers = (0..config.depth)
            .map(|l| ConvLayer {
                w: Param::glorot(format!("tok2vec.conv{}.w", l), 3 * w, w * config.pieces, rng),
                b: Param::zeros(format!("tok2vec.conv{}.b", l), 1, w * config.pieces),
            })
            .collect();
        Ok(Tok2Vec {
            config,
            vectors,
            embed,
            proj_w,
            proj_b,
            layers,
        })
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.config
    }

    pub fn vectors(&self) -> &Arc<StaticVectors> {
        &self.vectors
    }

    pub fn width(&self) -> usize {
        self.config.width
    }

    /// Embeds tokens into an `n × (static_dim + 256)` matrix.
    pub fn embed_tokens<S: AsRef<str>>(&self, texts: &[S]) -> Array2<f64> {
        self.embed_with_rows(texts).0
    }

    fn embed_with_rows<S: AsRef<str>>(&self, texts: &[S]) -> (Array2<f64>, Vec<[usize; 4]>) {
        let sd = self.config.static_dim;
        let mut x = Array2::zeros((texts.len(), self.config.input_width()));
        let mut rows = Vec::with_capacity(texts.len());
        for (i, text) in texts.iter().enumerate() {
            let text = text.as_ref();
            if let Some(v) = self.vectors.lookup(text) {
                for (dst, &src) in x.slice_mut(s![i, ..sd]).iter_mut().zip(v) {
                    *dst = src as f64;
                }
            }
            let r = self.embed.rows(text);
            for (t, &row) in r.iter().enumerate() {
                let off = sd + t * HASH_WIDTH;
                x.slice_mut(s![i, off..off + HASH_WIDTH])
                    .assign(&self.embed.tables[t].value.row(row));
            }
            rows.push(r);
        }
        (x, rows)
    }

    /// Encodes an embedded matrix into `n × W` contextual vectors.
    pub fn encode(&self, input: &Array2<f64>) -> Result<Array2<f64>> {
        if input.ncols() != self.config.input_width() {
            return Err(Error::Contract(format!(
                "encoder input has width {}, expected {}",
                input.ncols(),
                self.config.input_width()
            )));
        }
        let mut h = affine(&input.view(), &self.proj_w.value, &self.proj_b.value);
        for layer in &self.layers {
            let z = affine(&window(&h).view(), &layer.w.value, &layer.b.value);
            h += &maxout(&z, self.config.pieces).0;
        }
        Ok(h)
    }

    /// Embeds and encodes token texts.
    pub fn predict<S: AsRef<str>>(&self, texts: &[S]) -> Array2<f64> {
        self.encode(&self.embed_tokens(texts))
            .expect("embedding width matches the encoder")
    }

    /// Training-mode forward pass with inverted dropout on the input.
    pub fn forward<S: AsRef<str>, R: Rng>(
        &self,
        texts: &[S],
        dropout: f64,
        rng: &mut R,
    ) -> (Array2<f64>, EncoderCache) {
        let (mut input, rows) = self.embed_with_rows(texts);
        let keep = (dropout > 0.0).then(|| {
            let scale = 1.0 / (1.0 - dropout);
            let keep = Array2::from_shape_simple_fn(input.raw_dim(), || {
                if rng.random::<f64>() < dropout {
                    0.0
                } else {
                    scale
                }
            });
            input *= &keep;
            keep
        });
        let mut h = affine(&input.view(), &self.proj_w.value, &self.proj_b.value);
        let mut windows = Vec::with_capacity(self.layers.len());
        let mut which = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let win = window(&h);
            let z = affine(&win.view(), &layer.w.value, &layer.b.value);
            let (m, idx) = maxout(&z, self.config.pieces);
            h += &m;
            windows.push(win);
            which.push(idx);
        }
        (
            h,
            EncoderCache {
                rows,
                input,
                keep,
                windows,
                which,
            },
        )
    }

    /// Accumulates parameter gradients for `d_out = ∂loss/∂output`.
    pub fn backward(&mut self, cache: &EncoderCache, d_out: Array2<f64>) {
        let w = self.config.width;
        let mut dh = d_out;
        for (l, layer) in self.layers.iter_mut().enumerate().rev() {
            let dz = maxout_backward(&dh, &cache.which[l], self.config.pieces);
            layer.w.grad += &cache.windows[l].t().dot(&dz);
            layer.b.grad += &sum_rows(&dz);
            dh += &unwindow(&dz.dot(&layer.w.value.t()), w);
        }
        self.proj_w.grad += &cache.input.t().dot(&dh);
        self.proj_b.grad += &sum_rows(&dh);
        let mut dx = dh.dot(&self.proj_w.value.t());
        if let Some(keep) = &cache.keep {
            dx *= keep;
        }
        let sd = self.config.static_dim;
        for (i, rows) in cache.rows.iter().enumerate() {
            for (t, &row) in rows.iter().enumerate() {
                let off = sd + t * HASH_WIDTH;
                let mut grad_row = self.embed.tables[t].grad.row_mut(row);
                grad_row += &dx.slice(s![i, off..off + HASH_WIDTH]);
            }
        }
    }
}

impl HasParams for Tok2Vec {
    fn params(&self) -> Vec<&Param> {
        let mut out: Vec<&Param> = self.embed.tables.iter().collect();
        out.push(&self.proj_w);
        out.push(&self.proj_b);
        for layer in &self.layers {
            out.push(&layer.w);
            out.push(&layer.b);
        }
        out
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut out: Vec<&mut Param> = self.embed.tables.iter_mut().collect();
        out.push(&mut self.proj_w);
        out.push(&mut self.proj_b);
        for layer in &mut self.layers {
            out.push(&mut layer.w);
            out.push(&mut layer.b);
        }
        out
    }
}

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neural::{EncoderConfig, TrainConfig};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Gold CoNLL-U training corpus.
    pub train: Option<PathBuf>,
    pub dev: Option<PathBuf>,
    pub test: Option<PathBuf>,
    /// Corpus for the tagging pre-training step.
    pub pretrain: Option<PathBuf>,
    /// Static word vectors in the textual `count dim` format.
    pub vectors: Option<PathBuf>,
    pub tokenizer_rules: Option<PathBuf>,
    /// Entity corpora (token/tag TSV), concatenated for training.
    pub ner_train: Vec<PathBuf>,
    pub ner_dev: Option<PathBuf>,
    /// Output model directory.
    pub model: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Components {
    pub parser: bool,
    pub lemmatizer: bool,
    pub ner: bool,
}

impl Default for Components {
    fn default() -> Self {
        Components {
            parser: true,
            lemmatizer: true,
            ner: true,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LemmatizerConfig {
    /// Condition rules on UPOS and FEATS instead of UPOS alone.
    pub key_feats: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub paths: Paths,
    pub components: Components,
    pub encoder: EncoderConfig,
    pub training: TrainConfig,
    /// Hyperparameters of the pre-training step; `training` when absent.
    pub pretraining: Option<TrainConfig>,
    /// Hyperparameters of entity training; `training` when absent.
    pub ner_training: Option<TrainConfig>,
    pub lemmatizer: LemmatizerConfig,
    /// Sentences per document when reading entity corpora.
    pub ner_doc_sentences: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 1,
            paths: Paths::default(),
            components: Components::default(),
            encoder: EncoderConfig::default(),
            training: TrainConfig::default(),
            pretraining: None,
            ner_training: None,
            lemmatizer: LemmatizerConfig::default(),
            ner_doc_sentences: 10,
        }
    }
}

impl PipelineConfig {
    /// Parses TOML; relative paths are resolved against `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let mut config: PipelineConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.resolve(base);
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {}", path.display(), e)))?;
        PipelineConfig::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        let paths = &mut self.paths;
        for p in [
            &mut paths.train,
            &mut paths.dev,
            &mut paths.test,
            &mut paths.pretrain,
            &mut paths.vectors,
            &mut paths.tokenizer_rules,
            &mut paths.ner_dev,
            &mut paths.model,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
        paths.ner_train.iter_mut().for_each(fix);
    }

    /// Sets the seed of the pipeline and of every training stage.
    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.training.seed = seed;
        for c in [&mut self.pretraining, &mut self.ner_training].into_iter().flatten() {
            c.seed = seed;
        }
    }

    pub fn pretraining(&self) -> &TrainConfig {
        self.pretraining.as_ref().unwrap_or(&self.training)
    }

    pub fn ner_training(&self) -> &TrainConfig {
        self.ner_training.as_ref().unwrap_or(&self.training)
    }

    /// Checks that a training corpus is configured and every referenced
    /// input exists.
    pub fn validate(&self) -> Result<()> {
        let paths = &self.paths;
        if paths.train.is_none() {
            return Err(Error::Config("no training corpus configured (paths.train)".to_owned()));
        }
        let inputs = [
            &paths.train,
            &paths.dev,
            &paths.test,
            &paths.pretrain,
            &paths.vectors,
            &paths.tokenizer_rules,
            &paths.ner_dev,
        ];
        for p in inputs
            .into_iter()
            .flatten()
            .chain(paths.ner_train.iter())
        {
            if !p.exists() {
                return Err(Error::Config(format!("{} does not exist", p.display())));
            }
        }
        Ok(())
    }
}

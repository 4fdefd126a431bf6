use std::fs;
use std::io::BufReader;
use std::path::Path;
use std::sync::Arc;

use log::info;

use super::{Pipeline, PipelineConfig};
use crate::conllu::read_conllu;
use crate::doc::AnnotatedDoc;
use crate::error::{Error, Result};
use crate::lemmatizer::Lemmatizer;
use crate::ner::{train_ner, NerTrainLog};
use crate::ner_tsv::{read_ner_tsv, sentences_to_docs};
use crate::neural::StaticVectors;
use crate::syntax::{train_syntax, SyntaxModel, TrainLog};
use crate::tokenizer::{default_rules, TokenizerRules};

#[derive(Clone, Debug, Default)]
pub struct TrainReport {
    /// Tagging-only step on the pre-training corpus.
    pub pretrain: Option<TrainLog>,
    /// Joint tagging and parsing on the gold corpus.
    pub syntax: TrainLog,
    pub ner: Option<NerTrainLog>,
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {}", path.display(), e)))
}

fn read_corpus(path: &Path) -> Result<Vec<AnnotatedDoc>> {
    read_conllu(&read_text(path)?)
}

fn read_ner_docs<'a>(paths: impl IntoIterator<Item = &'a Path>, per_doc: usize) -> Result<Vec<AnnotatedDoc>> {
    let mut sentences = Vec::new();
    for path in paths {
        sentences.extend(read_ner_tsv(&read_text(path)?)?);
    }
    Ok(sentences_to_docs(&sentences, per_doc))
}

/// Trains every enabled component. With a pre-training corpus the encoder
/// and tagging heads are first trained on it alone; the parser is then added
/// and all weights continue training on the gold corpus.
pub fn train_pipeline(config: &PipelineConfig) -> Result<(Pipeline, TrainReport)> {
    config.validate()?;
    let paths = &config.paths;
    let vectors = match &paths.vectors {
        Some(path) => {
            let file = fs::File::open(path)?;
            StaticVectors::read_text(BufReader::new(file))?
        }
        None => StaticVectors::empty(config.encoder.static_dim),
    };
    let vectors = Arc::new(vectors);
    let rules = match &paths.tokenizer_rules {
        Some(path) => TokenizerRules::parse(&read_text(path)?)?,
        None => default_rules(),
    };
    let train = read_corpus(paths.train.as_deref().expect("validated"))?;
    let dev = match &paths.dev {
        Some(path) => read_corpus(path)?,
        None => Vec::new(),
    };
    let pretrain = match &paths.pretrain {
        Some(path) => Some(read_corpus(path)?),
        None => None,
    };

    let inventory = pretrain.iter().flatten().chain(&train);
    let mut syntax = SyntaxModel::new(config.encoder.clone(), vectors, inventory, config.seed)?;
    let mut report = TrainReport::default();
    if let Some(pretrain) = &pretrain {
        info!("step 1: tagging on {} pre-training documents", pretrain.len());
        report.pretrain = Some(train_syntax(&mut syntax, pretrain, &dev, config.pretraining())?);
    }
    if config.components.parser {
        syntax.add_parser(&train, config.seed)?;
    }
    info!("step 2: joint training on {} gold documents", train.len());
    report.syntax = train_syntax(&mut syntax, &train, &dev, &config.training)?;

    let lemmatizer = config
        .components
        .lemmatizer
        .then(|| Lemmatizer::from_docs(&train, config.lemmatizer.key_feats));

    let ner = if config.components.ner && !paths.ner_train.is_empty() {
        let per_doc = config.ner_doc_sentences;
        let ner_train = read_ner_docs(paths.ner_train.iter().map(|p| p.as_path()), per_doc)?;
        let ner_dev = read_ner_docs(paths.ner_dev.as_deref(), per_doc)?;
        info!("training the entity recognizer on {} documents", ner_train.len());
        let (model, log) = train_ner(syntax.tok2vec.clone(), &ner_train, &ner_dev, config.ner_training())?;
        report.ner = Some(log);
        Some(model)
    } else {
        None
    };

    let mut snapshot = config.clone();
    snapshot.paths.model = None;
    let pipeline = Pipeline {
        rules,
        syntax,
        lemmatizer,
        ner,
        seed: config.seed,
        config_snapshot: snapshot.to_toml(),
    };
    Ok((pipeline, report))
}

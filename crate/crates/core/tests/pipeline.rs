mod common;

use std::fs;
use std::path::Path;

use hunlp::conllu::{read_conllu, write_conllu};
use hunlp::eval::evaluate;
use hunlp::parser::is_projective;
use hunlp::pipeline::{train_pipeline, Pipeline};
use hunlp::{Error, Head};

fn trained(dir: &Path) -> Pipeline {
    let train = common::synthetic_docs(12, 8, 11);
    let config = common::small_config(dir, &train, &[], 3);
    train_pipeline(&config).unwrap().0
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().display().to_string();
                out.push((rel, fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn generator_produces_valid_projective_trees() {
    let docs = common::synthetic_docs(5, 10, 1);
    for doc in &docs {
        doc.validate().unwrap();
        for range in doc.sentences() {
            let heads: Vec<usize> = doc.tokens[range.clone()]
                .iter()
                .map(|t| match t.head {
                    Some(Head::Root) => 0,
                    Some(Head::Token(h)) => h - range.start + 1,
                    None => panic!("missing head"),
                })
                .collect();
            assert!(is_projective(&heads));
            assert_eq!(heads.iter().filter(|&&h| h == 0).count(), 1);
        }
    }
    let mut without_entities = docs.clone();
    without_entities.iter_mut().flat_map(|d| &mut d.tokens).for_each(|t| t.ent = None);
    assert_eq!(read_conllu(&write_conllu(&docs)).unwrap(), without_entities);
}

#[test]
fn annotation_is_total_and_keeps_gold_tokens() {
    let dir = tempfile::tempdir().unwrap();
    let pipeline = trained(dir.path());
    let held_out = common::synthetic_docs(3, 8, 99);
    let system: Vec<_> = held_out.iter().map(|d| pipeline.annotate_doc(d)).collect();
    for doc in &system {
        for t in &doc.tokens {
            assert!(t.upos.is_some() && t.feats.is_some() && t.lemma.is_some());
            assert!(t.head.is_some() && t.deprel.is_some() && t.ent.is_some());
        }
        assert!(hunlp::ner::tags_are_valid(doc));
    }
    let report = evaluate(&held_out, &system).unwrap();
    assert_eq!(report.tokens.f1(), 1.0);

    assert!(pipeline.annotate_text("").is_empty());
    assert!(pipeline.annotate_text(" \n ").is_empty());
    assert_eq!(write_conllu(&[pipeline.annotate_text("")]), "");
}

#[test]
fn raw_text_is_tokenized_first() {
    let dir = tempfile::tempdir().unwrap();
    let pipeline = trained(dir.path());
    let doc = pipeline.annotate_text("Péter látja a házat (Budapesten).");
    let texts: Vec<&str> = doc.tokens.iter().map(|t| t.text.as_str()).collect();
    assert_eq!(texts, ["Péter", "látja", "a", "házat", "(", "Budapesten", ")", "."]);
    assert_eq!(doc.source_text, "Péter látja a házat (Budapesten).");
}

#[test]
fn two_step_training_runs_both_phases() {
    let dir = tempfile::tempdir().unwrap();
    let all = common::synthetic_docs(12, 8, 5);
    let (pretrain, gold) = all.split_at(6);
    let mut config = common::small_config(dir.path(), gold, &[], 2);
    config.paths.pretrain = Some(common::write_conllu(dir.path(), "pretrain.conllu", pretrain));
    config.components.ner = false;
    let (pipeline, report) = train_pipeline(&config).unwrap();
    assert_eq!(report.pretrain.as_ref().unwrap().epochs.len(), 2);
    assert!(report.pretrain.unwrap().epochs.iter().all(|e| e.dev_uas.is_none()));
    assert!(report.syntax.epochs.iter().all(|e| e.dev_uas.is_some()));
    assert!(report.ner.is_none());
    assert_eq!(pipeline.components(), ["tokenizer", "tagger", "parser", "lemmatizer"]);
}

#[test]
fn missing_corpus_is_a_configuration_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = common::small_config(dir.path(), &common::synthetic_docs(1, 2, 0), &[], 1);
    config.paths.dev = Some(dir.path().join("absent.conllu"));
    assert!(matches!(train_pipeline(&config), Err(Error::Config(_))));
}

#[test]
fn bundle_round_trip_is_byte_identical_and_exact() {
    let dir = tempfile::tempdir().unwrap();
    let pipeline = trained(dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    pipeline.save(&a).unwrap();
    let loaded = Pipeline::load(&a).unwrap();
    loaded.save(&b).unwrap();
    assert_eq!(files(&a), files(&b));

    let held_out = common::synthetic_docs(4, 8, 1234);
    for doc in &held_out {
        assert_eq!(pipeline.annotate_doc(doc), loaded.annotate_doc(doc));
    }
    let text = &held_out[0].source_text;
    assert_eq!(pipeline.annotate_text(text), loaded.annotate_text(text));
}

#[test]
fn corrupted_bundles_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let pipeline = trained(dir.path());
    let model = dir.path().join("model");
    pipeline.save(&model).unwrap();
    let manifest = fs::read_to_string(model.join("manifest.txt")).unwrap();

    let expect_load_error = |file: &str| match Pipeline::load(&model) {
        Err(Error::Load { file: f, .. }) => assert!(f.to_string_lossy().ends_with(file), "{:?}", f),
        other => panic!("expected a load error for {}, got {:?}", file, other.map(|_| ())),
    };

    let blob = model.join("syntax/tagger.upos.w.bin");
    let bytes = fs::read(&blob).unwrap();
    fs::write(&blob, &bytes[..bytes.len() - 3]).unwrap();
    expect_load_error("tagger.upos.w.bin");
    fs::write(&blob, &bytes).unwrap();

    for (from, to) in [
        ("hash_id = fnv1a64", "hash_id = murmur3"),
        ("magic = hunlp-model", "magic = other"),
        ("format_version = 1", "format_version = 2"),
    ] {
        fs::write(model.join("manifest.txt"), manifest.replace(from, to)).unwrap();
        expect_load_error("manifest.txt");
    }
    fs::write(model.join("manifest.txt"), manifest.replace("encoder.width = 32", "encoder.width = 16")).unwrap();
    expect_load_error(".bin");
    fs::write(model.join("manifest.txt"), &manifest).unwrap();
    Pipeline::load(&model).unwrap();
}

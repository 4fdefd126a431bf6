#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::io::Write as _;
use std::path::Path;
use std::process::{Command, Output, Stdio};

fn hunlp(args: &[&str], stdin: Option<&str>) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_hunlp"))
        .args(args)
        .env("RUST_LOG", "warn")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut input = child.stdin.take().unwrap();
    input.write_all(stdin.unwrap_or("").as_bytes()).unwrap();
    drop(input);
    child.wait_with_output().unwrap()
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(hunlp(&["--help"], None).status.code(), Some(0));
    assert_eq!(hunlp(&["frobnicate"], None).status.code(), Some(1));
    assert_eq!(hunlp(&["inspect", "--model", path(&dir.path().join("none"))], None).status.code(), Some(1));

    let bad = dir.path().join("bad.conllu");
    std::fs::write(&bad, "1\tfa\tfa\tNOUN\t_\t_\tx\troot\t_\t_\n\n").unwrap();
    let out = hunlp(&["evaluate", path(&bad), path(&bad)], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
}

#[test]
fn tokenize_formats() {
    let text = "Nem tudom, hol van a 2021-es jelentés.\n\nA Duna-parton sétáltunk.\n";
    let tokens = stdout(&hunlp(&["tokenize", "--format", "text"], Some(text)));
    let lines: Vec<&str> = tokens.lines().collect();
    assert_eq!(&lines[..4], ["Nem", "tudom", ",", "hol"]);
    assert!(lines.contains(&"2021-es") && lines.contains(&"Duna-parton"));
    assert_eq!(lines.last(), Some(&"."));

    let conllu = stdout(&hunlp(&["tokenize"], Some(text)));
    assert_eq!(conllu.matches("\n\n").count(), 2);
    assert!(conllu.contains("# text = A Duna-parton sétáltunk."));
}

#[test]
fn train_annotate_evaluate_inspect() {
    let dir = tempfile::tempdir().unwrap();
    let train = common::synthetic_docs(12, 8, 31);
    let dev = common::synthetic_docs(2, 8, 32);
    let config = common::small_config(dir.path(), &train, &dev, 2);
    let config_path = dir.path().join("config.toml");
    std::fs::write(&config_path, config.to_toml()).unwrap();
    let model = dir.path().join("model");

    let out = hunlp(&["train", "--config", path(&config_path), "--model", path(&model)], None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(model.join("manifest.txt").exists());

    let info = stdout(&hunlp(&["inspect", "--model", path(&model)], None));
    assert!(info.starts_with("components\ttokenizer tagger parser lemmatizer ner\n"), "{}", info);

    let gold = common::write_conllu(dir.path(), "dev.conllu", &dev);
    let system = dir.path().join("system.conllu");
    stdout(&hunlp(
        &["annotate", "--model", path(&model), "--input", path(&gold), "--input-format", "conllu", "--output", path(&system)],
        None,
    ));
    let scores = stdout(&hunlp(&["evaluate", path(&gold), path(&system), "--format", "tsv"], None));
    let tokens = scores.lines().find(|l| l.starts_with("Tokens\t")).unwrap();
    assert_eq!(tokens.split('\t').nth(3), Some("1.0000"), "{}", scores);
    for metric in ["UPOS", "UFeats", "Lemmas", "UAS", "LAS", "Sentences"] {
        assert!(scores.lines().any(|l| l.starts_with(&format!("{}\t", metric))), "{}", scores);
    }

    let text = common::synthetic_text(400, 33).join("\n\n");
    let single = stdout(&hunlp(&["annotate", "--model", path(&model), "--format", "tsv"], Some(&text)));
    let parallel = stdout(&hunlp(&["annotate", "--model", path(&model), "--format", "tsv", "--jobs", "3"], Some(&text)));
    assert_eq!(single, parallel);
    let tsv = dir.path().join("system.tsv");
    std::fs::write(&tsv, &single).unwrap();
    let gold_tsv = common::write_ner_tsv(dir.path(), "dev.tsv", &dev);
    let ner = stdout(&hunlp(&["evaluate-ner", path(&gold_tsv), path(&gold_tsv)], None));
    assert!(ner.contains("f1\t1.0000"), "{}", ner);

    let bench = stdout(&hunlp(&["benchmark", "--model", path(&model), "--input", path(&tsv), "--input-format", "tsv", "--runs", "1"], None));
    assert!(bench.lines().any(|l| l.starts_with("tokens_per_second\t")), "{}", bench);
}

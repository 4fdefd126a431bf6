use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use rayon::prelude::*;

use hunlp::conllu::{read_conllu, write_conllu};
use hunlp::eval::{evaluate, evaluate_ner};
use hunlp::ner_tsv::{docs_to_sentences, read_ner_tsv, sentences_to_docs, write_ner_tsv};
use hunlp::neural::HasParams;
use hunlp::pipeline::{benchmark, train_pipeline, Pipeline, PipelineConfig};
use hunlp::tokenizer::{default_rules, tokenize, TokenizerRules};
use hunlp::AnnotatedDoc;

#[derive(Parser)]
#[command(name = "hunlp", version, about = "Hungarian text processing pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Io {
    /// Input file; standard input when omitted.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Conllu,
    Tsv,
}

#[derive(Subcommand)]
enum Command {
    /// Split raw text into tokens.
    Tokenize {
        #[command(flatten)]
        io: Io,
        /// Take the tokenizer rules from a trained model.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Rule file to use instead of the shipped rules.
        #[arg(long)]
        rules: Option<PathBuf>,
        /// `text` writes one token per line.
        #[arg(long, value_enum, default_value = "conllu")]
        format: Format,
    },
    /// Train a model from a configuration file.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `paths.model`.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Annotate raw text or CoNLL-U.
    Annotate {
        #[command(flatten)]
        io: Io,
        #[arg(long)]
        model: PathBuf,
        /// Input format: raw text (split into documents at blank lines) or CoNLL-U.
        #[arg(long, value_enum, default_value = "text")]
        input_format: Format,
        /// Output format: CoNLL-U, entity TSV, or one tokenized sentence per line.
        #[arg(long, value_enum, default_value = "conllu")]
        format: Format,
        /// Worker threads; documents are processed in parallel.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Score a system CoNLL-U file against a gold one.
    Evaluate {
        gold: PathBuf,
        system: PathBuf,
        /// `tsv` prints tab-separated precision, recall and F1.
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Score entity spans of a system TSV file against a gold one.
    EvaluateNer { gold: PathBuf, system: PathBuf },
    /// Measure annotation throughput and peak memory.
    Benchmark {
        #[arg(long)]
        model: PathBuf,
        /// Raw text corpus; CoNLL-U input is detokenized first.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        input_format: Format,
        #[arg(long, default_value_t = 5)]
        runs: usize,
    },
    /// Describe a trained model.
    Inspect {
        #[arg(long)]
        model: PathBuf,
    },
}

/// A failure with its exit status: 1 for usage errors, 2 for data errors.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<hunlp::Error> for Failure {
    fn from(e: hunlp::Error) -> Self {
        Failure {
            code: if e.is_data_error() { 2 } else { 1 },
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure {
            code: 2,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn read_input(path: Option<&Path>) -> CliResult<String> {
    match path {
        Some(p) => fs::read_to_string(p).map_err(|e| Failure::usage(format!("{}: {}", p.display(), e))),
        None => {
            let mut s = String::new();
            io::stdin().read_to_string(&mut s)?;
            Ok(s)
        }
    }
}

fn write_output(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::usage(format!("{}: {}", p.display(), e))),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

/// Splits raw text into documents at blank lines, keeping all whitespace
/// so that the documents concatenate back to the input.
fn split_paragraphs(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut at_line_start = true;
    let mut saw_content = false;
    let mut blank = false;
    for (i, c) in text.char_indices() {
        if c == '\n' {
            if at_line_start && saw_content {
                blank = true;
            }
            at_line_start = true;
        } else if !c.is_whitespace() {
            if blank {
                out.push(&text[start..i]);
                start = i;
                blank = false;
            }
            saw_content = true;
            at_line_start = false;
        }
    }
    if start < text.len() {
        out.push(&text[start..]);
    }
    out
}

fn sentences_as_text(docs: &[AnnotatedDoc]) -> String {
    let mut out = String::new();
    for doc in docs {
        for range in doc.sentences() {
            let words: Vec<&str> = doc.tokens[range].iter().map(|t| t.text.as_str()).collect();
            out.push_str(&words.join(" "));
            out.push('\n');
        }
    }
    out
}

fn read_docs(text: &str, format: Format, rules: Option<&TokenizerRules>) -> CliResult<Vec<AnnotatedDoc>> {
    match format {
        Format::Conllu => Ok(read_conllu(text)?),
        Format::Text => {
            let rules = rules.ok_or_else(|| Failure::usage("raw text input needs tokenizer rules"))?;
            Ok(split_paragraphs(text).into_iter().map(|p| tokenize(p, rules)).collect())
        }
        Format::Tsv => Ok(sentences_to_docs(&read_ner_tsv(text)?, 1)),
    }
}

fn load_model(dir: &Path) -> CliResult<Pipeline> {
    if !dir.is_dir() {
        return Err(Failure::usage(format!("{} is not a model directory", dir.display())));
    }
    Ok(Pipeline::load(dir)?)
}

fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Tokenize {
            io,
            model,
            rules,
            format,
        } => {
            let rules = match (model, rules) {
                (Some(_), Some(_)) => return Err(Failure::usage("--model and --rules are exclusive")),
                (Some(dir), None) => load_model(&dir)?.rules,
                (None, Some(path)) => TokenizerRules::parse(&read_input(Some(&path))?)?,
                (None, None) => default_rules(),
            };
            let docs = read_docs(&read_input(io.input.as_deref())?, Format::Text, Some(&rules))?;
            let out = match format {
                Format::Conllu => write_conllu(&docs),
                Format::Text => docs
                    .iter()
                    .flat_map(|d| d.tokens.iter().map(|t| format!("{}\n", t.text)))
                    .collect(),
                Format::Tsv => write_ner_tsv(&docs_to_sentences(&docs)),
            };
            write_output(io.output.as_deref(), &out)
        }
        Command::Train { config, model, seed } => {
            let mut config = PipelineConfig::from_file(&config)?;
            if let Some(seed) = seed {
                config.set_seed(seed);
            }
            if let Some(dir) = model {
                config.paths.model = Some(dir);
            }
            let dir = config
                .paths
                .model
                .clone()
                .ok_or_else(|| Failure::usage("no output directory (--model or paths.model)"))?;
            let (pipeline, report) = train_pipeline(&config)?;
            if let Some(log) = &report.pretrain {
                info!("pre-training kept epoch {}", log.best_epoch);
            }
            info!("joint training kept epoch {}", report.syntax.best_epoch);
            pipeline.save(&dir)?;
            eprintln!("saved {} to {}", pipeline.components().join(", "), dir.display());
            Ok(())
        }
        Command::Annotate {
            io,
            model,
            input_format,
            format,
            jobs,
        } => {
            let pipeline = load_model(&model)?;
            let text = read_input(io.input.as_deref())?;
            let docs = read_docs(&text, input_format, Some(&pipeline.rules))?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs.max(1))
                .build()
                .map_err(|e| Failure::usage(e.to_string()))?;
            let annotated: Vec<AnnotatedDoc> =
                pool.install(|| docs.par_iter().map(|d| pipeline.annotate_doc(d)).collect());
            let out = match format {
                Format::Conllu => write_conllu(&annotated),
                Format::Tsv => write_ner_tsv(&docs_to_sentences(&annotated)),
                Format::Text => sentences_as_text(&annotated),
            };
            write_output(io.output.as_deref(), &out)
        }
        Command::Evaluate { gold, system, format } => {
            let gold = read_conllu(&read_input(Some(&gold))?)?;
            let system = read_conllu(&read_input(Some(&system))?)?;
            let report = evaluate(&gold, &system)?;
            let out = match format {
                Format::Tsv => report.to_tsv(),
                _ => report.to_string(),
            };
            write_output(None, &out)
        }
        Command::EvaluateNer { gold, system } => {
            let gold = sentences_to_docs(&read_ner_tsv(&read_input(Some(&gold))?)?, 1);
            let system = sentences_to_docs(&read_ner_tsv(&read_input(Some(&system))?)?, 1);
            let s = evaluate_ner(&gold, &system)?;
            write_output(
                None,
                &format!(
                    "precision\t{:.4}\nrecall\t{:.4}\nf1\t{:.4}\n",
                    s.precision(),
                    s.recall(),
                    s.f1()
                ),
            )
        }
        Command::Benchmark {
            model,
            input,
            input_format,
            runs,
        } => {
            let pipeline = load_model(&model)?;
            let text = read_input(Some(&input))?;
            let texts: Vec<String> = match input_format {
                Format::Text => split_paragraphs(&text).into_iter().map(str::to_owned).collect(),
                _ => read_docs(&text, input_format, None)?
                    .into_iter()
                    .map(|d| d.source_text)
                    .collect(),
            };
            let report = benchmark(&pipeline, &texts, runs.max(1));
            let mut out = format!(
                "tokens\t{}\nruns\t{}\ntokens_per_second\t{:.1}\n",
                report.tokens,
                report.seconds.len(),
                report.tokens_per_second
            );
            match report.peak_rss_bytes {
                Some(b) => out.push_str(&format!("peak_rss_mb\t{:.1}\n", b as f64 / (1024.0 * 1024.0))),
                None => out.push_str("peak_rss_mb\tunavailable\n"),
            }
            write_output(None, &out)
        }
        Command::Inspect { model } => {
            let pipeline = load_model(&model)?;
            let syntax = &pipeline.syntax;
            let enc = syntax.tok2vec.config();
            let count = |ps: Vec<&hunlp::neural::Param>| ps.iter().map(|p| p.value.len()).sum::<usize>();
            let mut out = format!(
                "components\t{}\nseed\t{}\nwidth\t{}\ndepth\t{}\nstatic_vectors\t{} x {}\nupos_labels\t{}\nfeats_labels\t{}\n",
                pipeline.components().join(" "),
                pipeline.seed,
                enc.width,
                enc.depth,
                syntax.tok2vec.vectors().len(),
                enc.static_dim,
                syntax.tagger.upos.n_labels(),
                syntax.tagger.feats.n_labels(),
            );
            if let Some(parser) = &syntax.parser {
                out.push_str(&format!("deprel_labels\t{}\n", parser.labels().len()));
            }
            out.push_str(&format!("syntax_parameters\t{}\n", count(syntax.params())));
            if let Some(ner) = &pipeline.ner {
                out.push_str(&format!(
                    "entity_classes\t{}\nner_parameters\t{}\n",
                    ner.classes().join(" "),
                    count(ner.params())
                ));
            }
            write_output(None, &out)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

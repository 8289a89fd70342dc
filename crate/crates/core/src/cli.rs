//! Command-line surface. Results go to stdout (or `--output`); failures are
//! a single JSON object `{"error": kind, "message": text}` on stderr with a
//! nonzero exit code.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::diff::{alignment_json, Vocab};
use crate::encoder::EmbeddingArchive;
use crate::error::{Error, Result};
use crate::harness::model::{learn_vocab, prepare_record};
use crate::harness::{evaluate_with, load_corpus, train_with, Checkpoint, ChangeModel, RunConfig, Task};
use crate::queryback::Variant;

#[derive(Debug, Parser)]
#[command(name = "changerep", version, about = "Code change representation with query-back attention")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Corpus to alignment JSON, one object per record.
    Preprocess(PreprocessArgs),
    /// Train a model and write a checkpoint.
    Train(TrainArgs),
    /// Score a checkpoint on a labelled corpus.
    Evaluate(EvaluateArgs),
    /// Change-representation vectors as JSON lines.
    Encode(InferArgs),
    /// Generated commit messages, one per line.
    Generate(InferArgs),
    /// Write the encoder's contextual embeddings to an archive.
    ExportEmbeddings(ExportArgs),
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// JSON run configuration; missing fields take defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub task: Option<Task>,
    #[arg(long)]
    pub variant: Option<Variant>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut config = match &self.config {
            Some(p) => RunConfig::from_json_file(p)?,
            None => RunConfig::default(),
        };
        if let Some(t) = self.task {
            config.task = t;
        }
        if let Some(v) = self.variant {
            config.variant = v;
        }
        if let Some(s) = self.seed {
            config.seed = s;
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Take the vocabulary from this checkpoint instead of learning it.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Validation corpus; the epoch with the lowest validation loss is kept.
    #[arg(long)]
    pub valid: Option<PathBuf>,
    /// Checkpoint to write.
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Per-epoch loss log as JSON lines (default: stderr).
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Embedding archive used in place of the encoder for the ids it holds.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    /// Task the corpus is labelled for; must match the checkpoint.
    #[arg(long)]
    pub task: Option<Task>,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Per-record predictions as JSON lines.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn load_archive(path: Option<&Path>) -> Result<Option<EmbeddingArchive>> {
    path.map(|p| EmbeddingArchive::read_from(std::io::BufReader::new(File::open(p)?)))
        .transpose()
}

fn load_model(path: &Path) -> Result<ChangeModel> {
    Checkpoint::load(path)?.to_model()
}

fn preprocess(args: &PreprocessArgs) -> Result<()> {
    let records = load_corpus(&args.corpus, None)?;
    let (config, vocab) = match &args.checkpoint {
        Some(p) => {
            let ckpt = Checkpoint::load(p)?;
            let vocab = Vocab::from_units(ckpt.vocab_units.iter().cloned());
            (ckpt.config, vocab)
        }
        None => {
            let config = args.config.resolve()?;
            let vocab = learn_vocab(&records, &config)?;
            (config, vocab)
        }
    };
    let mut out = sink(args.output.as_deref())?;
    for r in &records {
        let prepared = prepare_record(r, &vocab, &config)?;
        serde_json::to_writer(&mut out, &alignment_json(&prepared))?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

fn train(args: &TrainArgs) -> Result<()> {
    let mut config = args.config.resolve()?;
    if let Some(e) = args.epochs {
        config.epochs = e;
    }
    let records = load_corpus(&args.corpus, Some(config.task))?;
    let valid = args
        .valid
        .as_deref()
        .map(|p| load_corpus(p, Some(config.task)))
        .transpose()?;
    let archive = load_archive(args.embeddings.as_deref())?;
    let mut log: Box<dyn Write> = match &args.log {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(std::io::stderr()),
    };
    let mut log_error = None;
    let outcome = train_with(&records, valid.as_deref(), &config, archive.as_ref(), |e| {
        let line = serde_json::to_string(e).expect("epoch log serializes");
        if let Err(err) = writeln!(log, "{line}").and_then(|_| log.flush()) {
            log_error.get_or_insert(err);
        }
    })?;
    if let Some(err) = log_error {
        return Err(err.into());
    }
    Checkpoint::from_model(&outcome.model, Some(&outcome.optimizer)).save(&args.output)?;
    let summary = json!({
        "checkpoint": args.output,
        "epochs": outcome.log.len(),
        "kept_epoch": outcome.kept_epoch,
        "final_train_loss": outcome.log.last().map(|e| e.train_loss),
    });
    println!("{summary}");
    Ok(())
}

fn evaluate(args: &EvaluateArgs) -> Result<()> {
    let model = load_model(&args.checkpoint)?;
    let task = args.task.unwrap_or(model.task());
    if task != model.task() {
        return Err(Error::TaskMismatch {
            checkpoint: model.task().name().into(),
            requested: task.name().into(),
        });
    }
    let records = load_corpus(&args.corpus, Some(task))?;
    let archive = load_archive(args.embeddings.as_deref())?;
    let eval = evaluate_with(&model, &records, task, archive.as_ref())?;
    for w in &eval.warnings {
        eprintln!("{}", json!({ "warning": w }));
    }
    if let Some(p) = &args.predictions {
        let mut out = sink(Some(p))?;
        for pred in &eval.predictions {
            serde_json::to_writer(&mut out, pred)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
    }
    let mut out = sink(args.output.as_deref())?;
    serde_json::to_writer(&mut out, &eval.report)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

fn encode(args: &InferArgs) -> Result<()> {
    let model = load_model(&args.checkpoint)?;
    let records = load_corpus(&args.corpus, None)?;
    let archive = load_archive(args.embeddings.as_deref())?;
    let mut out = sink(args.output.as_deref())?;
    for r in &records {
        let sample = model.prepare(r)?;
        let imported = model.imported_for(archive.as_ref(), &sample)?;
        let (vector, diag) = model.represent(&sample, imported.as_ref())?;
        let line = json!({
            "id": r.id,
            "variant": model.config.variant,
            "vector": vector,
            "diagnostics": diag,
            "truncated_before": sample.prepared.truncated_before,
            "truncated_after": sample.prepared.truncated_after,
            "dropped_hunks": sample.prepared.dropped_hunks,
        });
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

fn generate(args: &InferArgs) -> Result<()> {
    let model = load_model(&args.checkpoint)?;
    if model.task() != Task::Generate {
        return Err(Error::TaskMismatch {
            checkpoint: model.task().name().into(),
            requested: Task::Generate.name().into(),
        });
    }
    let records = load_corpus(&args.corpus, None)?;
    let archive = load_archive(args.embeddings.as_deref())?;
    let mut out = sink(args.output.as_deref())?;
    for r in &records {
        let sample = model.prepare(r)?;
        let imported = model.imported_for(archive.as_ref(), &sample)?;
        let ids = model.generate(&sample, imported.as_ref())?;
        writeln!(out, "{}", model.detokenize(&ids))?;
    }
    out.flush()?;
    Ok(())
}

fn export_embeddings(args: &ExportArgs) -> Result<()> {
    let model = load_model(&args.checkpoint)?;
    let records = load_corpus(&args.corpus, None)?;
    let mut archive = EmbeddingArchive::new(model.config.model_dim);
    for r in &records {
        let sample = model.prepare(r)?;
        archive.insert(r.id.clone(), model.contextual_embeddings(&sample.prepared)?)?;
    }
    let mut w = BufWriter::new(File::create(&args.output)?);
    archive.write_to(&mut w)?;
    w.flush()?;
    Ok(())
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Preprocess(a) => preprocess(a),
        Command::Train(a) => train(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Encode(a) => encode(a),
        Command::Generate(a) => generate(a),
        Command::ExportEmbeddings(a) => export_embeddings(a),
    }
}

pub fn error_json(kind: &str, message: &str) -> String {
    json!({ "error": kind, "message": message }).to_string()
}

/// Parses the process arguments, runs, and returns the exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            eprintln!("{}", error_json("usage", &e.to_string()));
            return 2;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", error_json(e.kind(), &e.to_string()));
            1
        }
    }
}

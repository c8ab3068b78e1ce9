//! `stagegate`: ingest, preprocess, embed, featurize, train, evaluate,
//! predict, explain and run table-shaped experiments.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 data error,
//! 4 internal invariant violation.

mod commands;
mod manifest;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stagegate_core::Error;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Core(Error::Config(_)) => 2,
            CliError::Core(e) if e.is_data_error() => 3,
            CliError::Io { .. } => 3,
            CliError::Core(_) | CliError::Internal(_) => 4,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "stagegate", version, about = "Emergency-stage classification of responder messages")]
pub struct Cli {
    /// Master seed; every random stream is derived from it. Each command
    /// documents its default.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads. 1 gives bit-reproducible output everywhere;
    /// word2vec with more threads is not reproducible.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    /// Run-manifest path. Defaults to `<output>.manifest.json` for commands
    /// that write artifacts; stdout-only commands write none unless set.
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a JSONL/CSV corpus and rewrite it as canonical JSONL.
    Ingest(IngestArgs),
    /// Split a labeled corpus into train and test files (default seed 1).
    Split(SplitArgs),
    /// Print descriptive statistics of a corpus.
    Stats(StatsArgs),
    /// Normalize, tokenize, tag and lemmatize; writes one JSON object per message.
    Preprocess(PreprocessArgs),
    /// Train skip-gram word vectors on corpus text (default seed 1).
    TrainEmbeddings(TrainEmbeddingsArgs),
    /// Print the nearest words of an embedding table.
    Neighbors(NeighborsArgs),
    /// Fit sparse features and dump the feature matrix.
    Featurize(FeaturizeArgs),
    /// Train a pipeline (features + classifier) from a TOML config (default seed 1).
    Train(TrainArgs),
    /// Evaluate a trained pipeline on a labeled file.
    Evaluate(EvaluateArgs),
    /// Predict labels for a corpus.
    Predict(PredictArgs),
    /// List the heaviest features of one class of an SVM pipeline.
    Explain(ExplainArgs),
    /// Run a table-shaped experiment from a TOML file (seed from the file
    /// unless --seed is given).
    Experiment(ExperimentArgs),
    /// Generate a labeled synthetic train/test pair (default seed 7).
    Synth(SynthArgs),
    /// Re-run the command recorded in a run manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// jsonl or csv; guessed from the extension when omitted.
    #[arg(long)]
    pub format: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 0.699)]
    pub train_fraction: f64,
    /// Shuffle without keeping class proportions.
    #[arg(long)]
    pub unstratified: bool,
    #[arg(long)]
    pub train_out: PathBuf,
    #[arg(long)]
    pub test_out: PathBuf,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub data: PathBuf,
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainEmbeddingsArgs {
    /// Corpus files (labels ignored); repeat for several.
    #[arg(long, required = true)]
    pub data: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// text or binary; `.bin` means binary when omitted.
    #[arg(long)]
    pub format: Option<String>,
    /// TOML file with word2vec settings; flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub negatives: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub min_count: Option<usize>,
}

#[derive(Debug, Args)]
pub struct NeighborsArgs {
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long)]
    pub word: String,
    #[arg(long, default_value_t = 10)]
    pub top: usize,
}

#[derive(Debug, Args)]
pub struct FeaturizeArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// TOML sparse-feature config (bow, pos_two_letter, desc, mode, idf).
    #[arg(long)]
    pub config: PathBuf,
    /// Corpus the vocabulary and idf are fitted on; defaults to --data.
    #[arg(long)]
    pub fit_on: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub train: PathBuf,
    /// TOML pipeline config with [features] and [classifier] tables.
    #[arg(long)]
    pub config: PathBuf,
    /// Word vectors, required for mean-embedding and matrix features.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Output pipeline directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    /// Also write the per-class report as CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// JSONL predictions; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// preparedness, response, post_emergency or engagement.
    #[arg(long)]
    pub class: String,
    #[arg(long, default_value_t = 10)]
    pub top: usize,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output root; overrides `out` in the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 4)]
    pub classes: usize,
    #[arg(long, default_value_t = 2000)]
    pub train: usize,
    #[arg(long, default_value_t = 500)]
    pub test: usize,
    /// Fraction of labels replaced by a random other class.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Directory receiving train.jsonl and test.jsonl.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// Manifest written by an earlier run.
    #[arg(long = "from")]
    pub from: PathBuf,
}

fn run(argv: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(std::iter::once("stagegate".to_owned()).chain(argv.iter().cloned())) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    if let Command::Replay(r) = &cli.command {
        return match manifest::RunManifest::load(&r.from) {
            Ok(m) => run(m.argv),
            Err(e) => {
                eprintln!("error: {e}");
                e.exit_code()
            }
        };
    }
    match commands::dispatch(&cli, argv) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    ExitCode::from(run(argv) as u8)
}

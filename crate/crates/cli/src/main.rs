//! `attrsense`: command-line frontend for the attribute-inference pipeline.
//!
//! Exit codes: 0 success, 1 usage error, 2 unreadable or invalid input,
//! 3 runtime failure.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use attrsense_core::models::Algorithm;
use attrsense_core::vectorize::Task;
use attrsense_core::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "attrsense", version, about = "Infer gender, occupation and age group from short-text posts")]
pub struct Cli {
    /// Base random seed
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Reproducible mode: single-threaded embedding training, no timings in outputs
    #[arg(long, global = true)]
    pub deterministic: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tokenize posts, join them to account labels and drop short posts
    Ingest(IngestArgs),
    /// Train skip-gram word vectors on training-account posts
    TrainEmbeddings(TrainEmbeddingsArgs),
    /// Build block datasets (train.csv, test.csv) for one task
    Vectorize(VectorizeArgs),
    /// Select hyperparameters by cross-validation and fit a model
    Train(TrainArgs),
    /// Score a model on a block dataset
    Evaluate(EvaluateArgs),
    /// Run the full experiment grid from a configuration file
    Sweep(SweepArgs),
    /// Rebuild report tables from a sweep's results.json
    Report(ReportArgs),
    /// Write a planted-signal synthetic corpus
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TokenizerArg {
    Unicode,
    Pretokenized,
    External,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Posts as JSON lines
    #[arg(long)]
    pub tweets: PathBuf,
    /// Account labels CSV
    #[arg(long)]
    pub labels: PathBuf,
    /// Drop posts with fewer tokens
    #[arg(long, default_value_t = attrsense_core::corpus::DEFAULT_MIN_TOKENS)]
    pub min_tokens: usize,
    #[arg(long, value_enum, default_value = "unicode")]
    pub tokenizer: TokenizerArg,
    /// Command for the external tokenizer (one line in, one line of tokens out)
    #[arg(long)]
    pub tokenizer_command: Option<String>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainEmbeddingsArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
    /// Vector dimension N
    #[arg(long, default_value_t = 100)]
    pub dim: usize,
    #[arg(long, default_value_t = 5)]
    pub window: usize,
    #[arg(long, default_value_t = 20)]
    pub epochs: usize,
    #[arg(long, default_value_t = 5)]
    pub negatives: usize,
    #[arg(long, default_value_t = 1)]
    pub min_count: u64,
}

#[derive(Debug, Args)]
pub struct VectorizeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Vector file from train-embeddings
    #[arg(long)]
    pub vectors: PathBuf,
    /// Posts per block L
    #[arg(long)]
    pub block_size: usize,
    #[arg(long, value_parser = parse_task)]
    pub task: Task,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Training dataset CSV from vectorize
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, value_parser = parse_task)]
    pub task: Task,
    #[arg(long, value_parser = parse_algorithm)]
    pub algo: Algorithm,
    /// Sweep configuration supplying the candidate grid
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = attrsense_core::eval::DEFAULT_FOLDS)]
    pub folds: usize,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Model file from train
    #[arg(long)]
    pub model: PathBuf,
    /// Test dataset CSV from vectorize
    #[arg(long)]
    pub dataset: PathBuf,
    /// Task (default: inferred from the model's classes)
    #[arg(long, value_parser = parse_task)]
    pub task: Option<Task>,
    /// Block size recorded in the report (default: from the dataset's meta.json)
    #[arg(long)]
    pub block_size: Option<usize>,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Sweep configuration (TOML)
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (overrides the configuration)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Directory that receives the report files
    #[arg(long)]
    pub out: PathBuf,
    /// results.json to read (default: <out>/results.json)
    #[arg(long)]
    pub results: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 60)]
    pub accounts: usize,
    #[arg(long, default_value_t = 40)]
    pub tweets_per_account: usize,
    /// Marker probability per token, for each attribute
    #[arg(long, default_value_t = 0.15)]
    pub marker_rate: f64,
    #[arg(long, default_value_t = 10)]
    pub test_accounts: usize,
}

fn parse_task(s: &str) -> Result<Task, String> {
    s.parse().map_err(|e: attrsense_core::Error| e.to_string())
}

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    s.parse().map_err(|e: attrsense_core::Error| e.to_string())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let kind = err
        .chain()
        .find_map(|e| e.downcast_ref::<attrsense_core::Error>())
        .map(attrsense_core::Error::kind);
    match kind {
        Some(ErrorKind::Input) => 2,
        Some(ErrorKind::Runtime) | None => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match commands::run(&cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use langgram::{DEFAULT_KEYWORD_THRESHOLD, DEFAULT_MAX_BYTES, DEFAULT_MIN_BYTES, DEFAULT_MI_THRESHOLD, DEFAULT_SIGMA, MAX_NGRAM};

#[derive(Debug, Parser)]
#[command(name = "langgram", version, about = "Identify the programming language of source files")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a model from a labeled corpus
    Train(TrainArgs),
    /// Rank the model's languages for one or more files
    Classify(ClassifyArgs),
    /// Score a model on a labeled test corpus
    Evaluate(EvaluateArgs),
    /// Serve classification over HTTP
    Serve(ServeArgs),
    /// Dump tables stored in a model file
    Inspect(InspectArgs),
    /// Print the normalized token stream of a file
    Preprocess(PreprocessArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArg {
    /// Model file
    #[arg(long, short, env = "LANGGRAM_MODEL")]
    pub model: PathBuf,
}

#[derive(Debug, Clone, Args, Default)]
pub struct CorpusArgs {
    /// Directory whose subdirectories are languages, each holding repositories
    #[arg(long, value_name = "DIR")]
    pub corpus: Vec<PathBuf>,
    /// One language directory, as LANGUAGE=DIR; first path component is the repository
    #[arg(long = "lang-dir", value_name = "LANGUAGE=DIR")]
    pub lang_dir: Vec<String>,
    /// Manifest of `repo TAB language TAB path` lines
    #[arg(long, value_name = "FILE")]
    pub manifest: Vec<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SizeArgs {
    /// Smallest file size kept, in bytes
    #[arg(long, default_value_t = DEFAULT_MIN_BYTES)]
    pub min_bytes: u64,
    /// Largest file size kept, in bytes
    #[arg(long, default_value_t = DEFAULT_MAX_BYTES)]
    pub max_bytes: u64,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Where to write the model
    #[arg(long, short)]
    pub out: PathBuf,
    /// Document frequency at which a word becomes a keyword
    #[arg(long, default_value_t = DEFAULT_KEYWORD_THRESHOLD)]
    pub keyword_threshold: f64,
    /// Mutual information a candidate must exceed to enter the grammar
    #[arg(long, default_value_t = DEFAULT_MI_THRESHOLD)]
    pub mi_threshold: f64,
    /// Gaussian prior scale on the weights
    #[arg(long, default_value_t = DEFAULT_SIGMA)]
    pub sigma: f64,
    /// Longest production length
    #[arg(long, default_value_t = MAX_NGRAM)]
    pub n_max: usize,
    #[command(flatten)]
    pub sizes: SizeArgs,
    /// Share of each language's files assigned to training
    #[arg(long, default_value_t = 0.8)]
    pub train_fraction: f64,
    /// Seed for the repository shuffle
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Gradient max-norm at which training stops
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    #[arg(long, default_value_t = 500)]
    pub max_iters: usize,
    /// Extra comment-syntax TOML merged over the built-in table
    #[arg(long, value_name = "FILE")]
    pub comment_syntax: Option<PathBuf>,
    /// Print the optimizer trace to stderr
    #[arg(long)]
    pub trace: bool,
    /// Write the test side of the split as a manifest
    #[arg(long, value_name = "FILE")]
    pub test_manifest_out: Option<PathBuf>,
    /// Write the train side of the split as a manifest
    #[arg(long, value_name = "FILE")]
    pub train_manifest_out: Option<PathBuf>,
    /// Record a creation time (SOURCE_DATE_EPOCH if set, else now) in the model
    #[arg(long)]
    pub timestamp: bool,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub model: ModelArg,
    /// Files to classify; `-` or nothing reads standard input
    pub inputs: Vec<PathBuf>,
    /// Show only the N most probable languages
    #[arg(long)]
    pub top: Option<usize>,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub model: ModelArg,
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Re-split the corpus with the model's seed and fraction and score only the test side
    #[arg(long)]
    pub test_side: bool,
    /// Exit with status 3 when macro-F is below this value
    #[arg(long)]
    pub min_f: Option<f64>,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
    /// Write `path TAB actual TAB predicted` for every misclassified file
    #[arg(long, value_name = "FILE")]
    pub misclassified: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub model: ModelArg,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub bind: SocketAddr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Table {
    Keywords,
    Grammar,
    Weights,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[arg(value_enum)]
    pub what: Table,
    #[command(flatten)]
    pub model: ModelArg,
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    /// File to read; `-` or nothing reads standard input
    pub input: Option<PathBuf>,
    /// Also lexicalize with this language's keywords from --model
    #[arg(long, requires = "model")]
    pub language: Option<String>,
    #[arg(long, env = "LANGGRAM_MODEL")]
    pub model: Option<PathBuf>,
}

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Latent concept analysis for code models.
#[derive(Debug, Parser)]
#[command(name = "codeconcept", version)]
pub struct Cli {
    /// Key-value file whose entries act as flags of the subcommand; flags on
    /// the command line take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split a corpus into tagged parser tokens.
    Tokenize(TokenizeArgs),
    /// Write deterministic hashed activations for a token table.
    StubActivations(StubArgs),
    /// Cluster activations into latent concepts.
    Discover(DiscoverArgs),
    /// Lexical patterns and syntactic alignment of clusters.
    Align(AlignArgs),
    /// Label clusters with an LLM.
    Annotate(AnnotateArgs),
    /// Apply a semantic-preserving transformation to a corpus.
    Perturb(PerturbArgs),
    /// Cluster Sensitivity Index between two clusterings.
    Csi(CsiArgs),
    /// Map salient tokens to concepts and build explanation prompts.
    Attribute(AttributeArgs),
    /// Aggregate stage outputs into a markdown dossier.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct TokenizeArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Comma-separated language names to keep.
    #[arg(long, value_delimiter = ',')]
    pub languages: Vec<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct StubArgs {
    #[arg(long)]
    pub tokens: PathBuf,
    #[arg(long, default_value_t = 32)]
    pub dim: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Reuse rows of these activations for tokens with a counterpart.
    #[arg(long, requires = "map")]
    pub from: Option<PathBuf>,
    /// Correspondence maps from `perturb`, used with `--from`.
    #[arg(long, requires = "from")]
    pub map: Option<PathBuf>,
    /// Manifest path; the token table and matrix go next to it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct DiscoverArgs {
    #[arg(long)]
    pub activations: PathBuf,
    #[arg(long)]
    pub tokens: PathBuf,
    #[arg(long, default_value_t = 350)]
    pub k: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 300)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 15_000)]
    pub max_token_freq: usize,
    #[arg(long, default_value_t = 15_000)]
    pub max_cluster_size: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct AlignArgs {
    #[arg(long)]
    pub clusters: PathBuf,
    /// Token table carrying the syntactic tags.
    #[arg(long)]
    pub tags: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = [0.85, 0.9, 0.95])]
    pub thresholds: Vec<f64>,
    #[arg(long, default_value_t = 0.8)]
    pub lexical_threshold: f64,
    /// Directory for the JSON, CSV and markdown reports.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct AnnotateArgs {
    #[arg(long)]
    pub clusters: PathBuf,
    #[arg(long)]
    pub tokens: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub endpoint: String,
    #[arg(long, default_value = "gpt-4o")]
    pub model: String,
    /// Environment variable holding the bearer token.
    #[arg(long)]
    pub auth_env: Option<String>,
    #[arg(long, default_value_t = 0.2)]
    pub temperature: f64,
    #[arg(long, default_value_t = 0.4)]
    pub top_p: f64,
    #[arg(long, default_value_t = 8)]
    pub top_k: u32,
    /// Send `top_k`; most chat-completion APIs reject it.
    #[arg(long)]
    pub supports_top_k: bool,
    #[arg(long, default_value_t = 12)]
    pub max_contexts: usize,
    #[arg(long, default_value_t = 4)]
    pub max_in_flight: usize,
    #[arg(long, default_value_t = 3)]
    pub max_retries: u32,
    #[arg(long, default_value_t = 60)]
    pub timeout_secs: u64,
    #[arg(long, default_value = "/choices/0/message/content")]
    pub response_pointer: String,
    /// Language named in the prompt.
    #[arg(long, default_value = "Java")]
    pub language: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct PerturbArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub kind: String,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Fraction of statements preceded by an empty statement.
    #[arg(long, default_value_t = 0.25)]
    pub noop_density: f64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub map: PathBuf,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct CsiArgs {
    #[arg(long)]
    pub before: PathBuf,
    #[arg(long)]
    pub after: PathBuf,
    #[arg(long)]
    pub map: Option<PathBuf>,
    /// Row name in the report; defaults to the map's perturbation kind.
    #[arg(long)]
    pub label: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct AttributeArgs {
    #[arg(long)]
    pub activations: PathBuf,
    #[arg(long)]
    pub clusters: PathBuf,
    #[arg(long)]
    pub attributions: PathBuf,
    #[arg(long)]
    pub tokens: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    pub top_p: f64,
    #[arg(long, default_value = "Programming Language Classification")]
    pub task: String,
    #[arg(long, default_value_t = 50)]
    pub max_words: usize,
    #[arg(long, default_value_t = 0.1)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub l2: f64,
    #[arg(long, default_value_t = 2000)]
    pub max_epochs: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Also save the trained classifier here.
    #[arg(long)]
    pub classifier_out: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct ReportArgs {
    #[arg(long)]
    pub clusters: Option<PathBuf>,
    #[arg(long)]
    pub tokens: Option<PathBuf>,
    /// Directory written by `align`.
    #[arg(long)]
    pub alignment: Option<PathBuf>,
    /// Reports written by `csi`, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub csi: Vec<PathBuf>,
    #[arg(long)]
    pub annotations: Option<PathBuf>,
    /// Markdown output; a CSV of the stability table goes next to it.
    #[arg(long)]
    pub out: PathBuf,
}

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Time-interval-aware augmentation pipeline for interaction sequences.
///
/// Sequence files are JSONL, one user per line:
/// {"user":"u1","items":["a","b"],"timestamps":[1,5]}
/// Augmented files add a "provenance" object per line. Timestamps are
/// integer seconds. Output paths are resolved against --out-dir; input paths
/// against the working directory. Every run writes
/// <out-dir>/<command>.run-manifest.json with the arguments, the effective
/// configuration, the seed and sha256 digests of all inputs and outputs.
///
/// Exit codes: 0 success, 1 runtime error, 2 usage error, 3 invalid
/// configuration. Errors are printed to stderr as one JSON line.
#[derive(Debug, Parser)]
#[command(name = "tiaug", version)]
pub struct Cli {
    /// Master seed for every random choice (default 0; overrides the config file).
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Flat `key = value` augmentation config (beta, eta, mu, gamma, sigma,
    /// short_threshold, max_len, seed, operators). Unknown keys are errors.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Directory receiving every output file and the run manifest.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    pub out_dir: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a CSV/JSONL interaction log into per-user sequences.
    ///
    /// CSV needs the header columns user_id, item_id, timestamp (any order);
    /// JSONL needs the same three fields per object. Malformed rows are
    /// counted in ingest-report.json. The time range filter runs before
    /// k-core filtering.
    Ingest(IngestArgs),
    /// Interval statistics: writes profile.csv (user_id,n_intervals,mean,std)
    /// and curve.csv (ratio,fraction).
    Stats(StatsArgs),
    /// Split users into uniform and non-uniform subsets: writes U.jsonl and N.jsonl.
    Partition(PartitionArgs),
    /// Generate a synthetic dataset with interval-coupled preference drift.
    Synth(SynthArgs),
    /// Augment sequences; writes JSONL with per-line provenance and augment-report.json.
    Augment(AugmentArgs),
    /// Train the baseline recommender and report HR@k / NDCG@k
    /// (eval-report.json, eval-report.csv).
    Eval(EvalArgs),
    /// Compare uniform and non-uniform subsets (assumption.json, assumption.csv).
    ValidateAssumption(AssumptionArgs),
    /// Swap each interval-aware operator for its random counterpart
    /// (ablation.json, ablation.csv).
    Ablate(ExperimentArgs),
    /// Gate fractions 0.0 to 0.5 in steps of 0.1 against gating nothing
    /// (sigma-sweep.json, sigma-sweep.csv).
    SigmaSweep(ExperimentArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Format {
    Csv,
    Jsonl,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Raw interaction log.
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    /// Input format; defaults to the file extension, else csv.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Minimum interactions per user and per item.
    #[arg(long, default_value_t = 5)]
    pub k_core: usize,
    /// Keep interactions at or after this timestamp.
    #[arg(long, allow_hyphen_values = true)]
    pub from: Option<i64>,
    /// Keep interactions strictly before this timestamp.
    #[arg(long, allow_hyphen_values = true)]
    pub to: Option<i64>,
    /// Output sequence file.
    #[arg(long, default_value = "sequences.jsonl")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Sequence JSONL file.
    #[arg(long, value_name = "FILE")]
    pub data: PathBuf,
    /// Ascending ratios of the mean std to evaluate the uniform-ratio curve at.
    #[arg(long, value_delimiter = ',', default_value = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1,1.2,1.4,1.6,1.8,2")]
    pub ratios: Vec<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum StrategyArg {
    S,
    I,
    Random,
}

#[derive(Debug, Args)]
pub struct PartitionArgs {
    #[arg(long, value_name = "FILE")]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value = "s")]
    pub strategy: StrategyArg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ProfileArg {
    Uniform,
    Heavytail,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value = "heavytail")]
    pub profile: ProfileArg,
    #[arg(long, default_value_t = 2000)]
    pub users: usize,
    #[arg(long, default_value_t = 200)]
    pub items: usize,
    #[arg(long, default_value_t = 10)]
    pub categories: usize,
    #[arg(long, default_value_t = 5)]
    pub min_len: usize,
    #[arg(long, default_value_t = 20)]
    pub max_len: usize,
    /// Uniform profile: base gap in seconds.
    #[arg(long, default_value_t = 86_400)]
    pub gap: i64,
    /// Uniform profile: maximum absolute jitter in seconds.
    #[arg(long, default_value_t = 0)]
    pub jitter: i64,
    /// Heavy-tail profile: mean of the log gap (default ln 86400).
    #[arg(long)]
    pub log_mu: Option<f64>,
    /// Heavy-tail profile: standard deviation of the log gap.
    #[arg(long, default_value_t = 1.5)]
    pub log_sigma: f64,
    /// Drift timescale in seconds; `inf` disables drift.
    #[arg(long, conflicts_with = "switch_prob")]
    pub tau: Option<f64>,
    /// Category switch probability at the median gap; sets the timescale.
    #[arg(long, default_value_t = 0.3)]
    pub switch_prob: f64,
    #[arg(long, default_value = "data.jsonl")]
    pub out: PathBuf,
}

/// Overrides for the augmentation config.
#[derive(Debug, Args, Default)]
pub struct AugmentOverrides {
    /// Insert ratio.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Crop and reorder window ratio.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Mask ratio.
    #[arg(long)]
    pub mu: Option<f64>,
    /// Substitute ratio (defaults to mu).
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Fraction of most uniform sequences left untouched.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Sequences this short or shorter only get substitute, insert or mask.
    #[arg(long)]
    pub short_threshold: Option<usize>,
    /// Insert output keeps at most this many most recent items.
    #[arg(long)]
    pub max_len: Option<usize>,
    /// Comma-separated operators: TS,TI,TM,TC,TR or random S,I,M,C,R.
    #[arg(long)]
    pub operators: Option<String>,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    #[arg(long = "in", value_name = "FILE")]
    pub input: PathBuf,
    #[arg(long, default_value = "augmented.jsonl")]
    pub out: PathBuf,
    /// Drop each user's last two items first and augment only the training part.
    #[arg(long)]
    pub holdout: bool,
    /// Reuse a similarity model dump instead of fitting one on the input.
    #[arg(long, value_name = "FILE")]
    pub model: Option<PathBuf>,
    /// Write the similarity model dump to this output file.
    #[arg(long, value_name = "FILE")]
    pub save_model: Option<PathBuf>,
    /// Co-occurrence window of the similarity model.
    #[arg(long, default_value_t = 5)]
    pub window: usize,
    #[command(flatten)]
    pub overrides: AugmentOverrides,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TargetArg {
    Valid,
    Test,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    /// Mixture weights markov,knn,pop; must sum to 1.
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.3,0.2")]
    pub weights: Vec<f64>,
    /// History items averaged by the similarity term.
    #[arg(long, default_value_t = 5)]
    pub recent: usize,
    /// Co-occurrence window of the similarity model.
    #[arg(long, default_value_t = 5)]
    pub window: usize,
    /// Ranking cutoffs.
    #[arg(long, value_delimiter = ',', default_value = "10,20")]
    pub k: Vec<usize>,
    #[arg(long, value_enum, default_value = "test")]
    pub target: TargetArg,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Full sequences; the last two items of each user are held out.
    #[arg(long, value_name = "FILE")]
    pub data: PathBuf,
    /// Augmented training sequences to add, as written by `augment --holdout`.
    #[arg(long, value_name = "FILE")]
    pub augmented: Option<PathBuf>,
    #[command(flatten)]
    pub baseline: BaselineArgs,
}

#[derive(Debug, Args)]
pub struct AssumptionArgs {
    #[arg(long, value_name = "FILE")]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value = "s")]
    pub strategy: StrategyArg,
    #[command(flatten)]
    pub baseline: BaselineArgs,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long, value_name = "FILE")]
    pub data: PathBuf,
    /// Augmented copies added to training per transformed user.
    #[arg(long, default_value_t = 1)]
    pub views: usize,
    #[command(flatten)]
    pub baseline: BaselineArgs,
    #[command(flatten)]
    pub overrides: AugmentOverrides,
}

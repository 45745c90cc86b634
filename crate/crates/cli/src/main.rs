mod cmd;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use segalign::error::SegalignError;

#[derive(Parser, Debug)]
#[command(name = "segalign", version, about = "Segmental alignment and classification of time series")]
pub struct Cli {
    /// Cap on concurrent pairwise computations (default: available parallelism).
    #[arg(long, global = true, env = "SEGALIGN_JOBS")]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Align two sequences and print the alignment as JSON.
    Align(AlignArgs),
    /// Learn model transitions from same-class pairs of a labeled dataset.
    Train(TrainArgs),
    /// Nearest-neighbour classification with a held-out set or cross-validation.
    Classify(ClassifyArgs),
    /// Write synthetic datasets.
    Synth(SynthArgs),
    /// Corrupt or filter a dataset.
    Noise(NoiseArgs),
    /// Signed-rank comparison of two results files.
    Report(ReportArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScorerKind {
    Sphmm,
    Phmm,
    Marginal,
    Dtw,
    Sm,
    Fastsm,
}

impl ScorerKind {
    pub fn is_bow(self) -> bool {
        matches!(self, ScorerKind::Sm | ScorerKind::Fastsm)
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum MetricKind {
    L1,
    Intersection,
    Chisq,
}

/// Settings shared by every scorer.
#[derive(Args, Debug, Clone)]
pub struct ScoreOpts {
    #[arg(long, value_enum, env = "SEGALIGN_SCORER", default_value = "sphmm")]
    pub scorer: ScorerKind,
    /// Model JSON for the probabilistic scorers.
    #[arg(long, env = "SEGALIGN_MODEL")]
    pub model: Option<PathBuf>,
    /// Sakoe-Chiba half-width in samples.
    #[arg(long, env = "SEGALIGN_BAND")]
    pub band: Option<usize>,
    /// Maximum segment length on both sides.
    #[arg(long, env = "SEGALIGN_LMAX")]
    pub lmax: Option<usize>,
    #[arg(long, env = "SEGALIGN_LMIN")]
    pub lmin: Option<usize>,
    /// DTW gap penalty.
    #[arg(long, env = "SEGALIGN_GAP_PENALTY", default_value_t = 0.0)]
    pub gap_penalty: f64,
    /// Histogram metric for sm and fastsm.
    #[arg(long, value_enum, env = "SEGALIGN_METRIC", default_value = "l1")]
    pub metric: MetricKind,
    /// Temperature of the histogram distance for sm and fastsm.
    #[arg(long, env = "SEGALIGN_SIGMA", default_value_t = 1.0)]
    pub sigma: f64,
    /// Compare raw histogram counts instead of normalized ones.
    #[arg(long)]
    pub raw_counts: bool,
    /// Turn off bound-based sealing in fastsm.
    #[arg(long)]
    pub no_prune: bool,
}

#[derive(Args, Debug)]
pub struct AlignArgs {
    /// First sequence (CSV, or a BoW frame file for sm/fastsm).
    #[arg(long)]
    pub x: PathBuf,
    #[arg(long)]
    pub y: PathBuf,
    #[command(flatten)]
    pub score: ScoreOpts,
    /// Write the JSON here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Labeled dataset in UCR layout.
    #[arg(long)]
    pub data: PathBuf,
    /// Starting model; defaults apply when absent.
    #[arg(long, env = "SEGALIGN_MODEL")]
    pub init: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, env = "SEGALIGN_LMAX")]
    pub lmax: Option<usize>,
    #[arg(long, env = "SEGALIGN_BAND")]
    pub band: Option<usize>,
    #[arg(long, default_value_t = 25)]
    pub max_iters: usize,
    /// Null parameter: a number, or `mle`.
    #[arg(long, default_value = "0.6")]
    pub eta: String,
    /// Also re-estimate the segment length prior.
    #[arg(long)]
    pub learn_psi: bool,
    /// Use at most this many same-class pairs, chosen at random.
    #[arg(long)]
    pub max_pairs: Option<usize>,
    #[arg(long, env = "SEGALIGN_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoiseKindArg {
    Impulse,
    Gaussian,
}

#[derive(Args, Debug)]
pub struct ClassifyArgs {
    /// Training set: a UCR file, or a BoW index for sm/fastsm.
    #[arg(long)]
    pub train: PathBuf,
    /// Held-out set; cross-validation on the training set when absent.
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[command(flatten)]
    pub score: ScoreOpts,
    /// Try ten DTW gap penalties over [0, 100] and keep the best.
    #[arg(long)]
    pub gap_sweep: bool,
    /// Average over this many noisy copies of the data.
    #[arg(long, default_value_t = 0)]
    pub replicas: usize,
    #[arg(long, value_enum, default_value = "impulse")]
    pub noise: NoiseKindArg,
    #[arg(long, default_value_t = 1.0)]
    pub omega: f64,
    #[arg(long, env = "SEGALIGN_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Results JSON path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Accuracy table path.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum SynthKind {
    S1,
    S2,
    Bow,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub kind: SynthKind,
    /// Pairs for s1, sequences per class for s2 and bow.
    #[arg(long, default_value_t = 100)]
    pub count: usize,
    #[arg(long, env = "SEGALIGN_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Leave the warp noise-free (s1).
    #[arg(long)]
    pub causal: bool,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum FilterArg {
    Median,
    Mean,
}

#[derive(Args, Debug)]
pub struct NoiseArgs {
    /// Dataset in UCR layout.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "impulse")]
    pub kind: NoiseKindArg,
    #[arg(long, default_value_t = 1.0)]
    pub omega: f64,
    #[arg(long, default_value_t = 0.2)]
    pub coverage: f64,
    #[arg(long, env = "SEGALIGN_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Filter after (or instead of, with --omega 0) adding noise.
    #[arg(long, value_enum)]
    pub filter: Option<FilterArg>,
    #[arg(long, default_value_t = 5)]
    pub window: usize,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    /// Print JSON instead of text.
    #[arg(long)]
    pub json: bool,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<SegalignError>()) {
        Some(e) if e.is_infeasibility() => 4,
        _ => 3,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            log::warn!("could not size the thread pool: {e}");
        }
    }
    match cmd::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

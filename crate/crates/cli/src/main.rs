//! `triplet-embed`: every pipeline stage as one subcommand.
//!
//! Exit codes: 0 success, 1 usage error, 2 data validation failure,
//! 3 numerical failure. Each successful run prints a JSON manifest on stdout.

mod commands;
mod config;
mod manifest;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use triplet_embed::ErrorKind;

#[derive(Debug, Parser)]
#[command(name = "triplet-embed", version, about = "Sparse triplet embeddings and embedding comparison")]
pub struct Cli {
    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true, env = "TRIPLET_EMBED_THREADS")]
    pub threads: Option<usize>,

    /// JSON file with option defaults; command-line flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check feature, triplet or embedding files against their format.
    Validate(ValidateArgs),
    /// Simulate odd-one-out choices from a feature matrix.
    Simulate(SimulateArgs),
    /// Fit a sparse variational embedding to a triplet file.
    Train(TrainArgs),
    /// Split-half reliability across training runs.
    Reliability(ReliabilityArgs),
    /// Correlate the similarity matrices of two embeddings.
    Rsa(RsaArgs),
    /// Pair the dimensions of two embeddings by correlation.
    MatchDims(MatchDimsArgs),
    /// RSA as source dimensions are added one at a time.
    CumulativeRsa(CumulativeRsaArgs),
    /// Jackknife relevance of dimensions for individual choices.
    Jackknife(JackknifeArgs),
    /// Ridge maps from raw features to embedding dimensions.
    Ridge(RidgeArgs),
    /// Render summary files as SVG charts.
    Report(ReportArgs),
    /// Write a planted sparse embedding as a feature directory.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Rectify negative feature values instead of rejecting them.
    #[arg(long)]
    pub allow_raw: bool,
    #[arg(long)]
    pub triplets: Option<PathBuf>,
    #[arg(long)]
    pub n_objects: Option<usize>,
    /// `pair-pair-odd` or `odd-pair-pair`.
    #[arg(long, default_value = "pair-pair-odd")]
    pub column_order: String,
    /// Model directory or embedding TSV.
    #[arg(long)]
    pub embedding: Option<PathBuf>,
    #[arg(long)]
    pub labels: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub allow_raw: bool,
    /// Number of triplets.
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// `lowest` or `highest` pair indices win exact ties.
    #[arg(long, default_value = "lowest")]
    pub tie_rule: String,
    /// Sample with replacement instead of drawing distinct triples.
    #[arg(long)]
    pub allow_repeats: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub triplets: PathBuf,
    #[arg(long)]
    pub n_objects: Option<usize>,
    #[arg(long, default_value = "pair-pair-odd")]
    pub column_order: String,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 150)]
    pub p_init: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1024)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 1000)]
    pub max_epochs: usize,
    #[arg(long, default_value_t = 500)]
    pub stability_window: usize,
    #[arg(long, default_value_t = 1)]
    pub mc_samples: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 1)]
    pub prune_every: usize,
    #[arg(long, default_value_t = 0.95)]
    pub keep_prob_threshold: f64,
    #[arg(long, default_value_t = 5)]
    pub min_objects: usize,
    #[arg(long, default_value_t = 0.1)]
    pub val_fraction: f64,
    #[arg(long, default_value_t = 0.01)]
    pub init_sigma: f64,
    /// Half-width of the uniform initial means (default 1/sqrt(objects)).
    #[arg(long)]
    pub init_mu_scale: Option<f64>,
    /// Slab weight of the spike-and-slab prior.
    #[arg(long, default_value_t = 0.5)]
    pub pi: f64,
    #[arg(long, default_value_t = 0.25)]
    pub sigma_spike: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma_slab: f64,
}

#[derive(Debug, Args)]
pub struct ReliabilityArgs {
    /// Glob matching training output directories.
    #[arg(long)]
    pub runs: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RsaArgs {
    #[arg(long)]
    pub embedding_a: PathBuf,
    #[arg(long)]
    pub embedding_b: PathBuf,
    /// `exact`, `sampled:K` or `auto`.
    #[arg(long, default_value = "auto")]
    pub mode: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// File with one object index per line; restricts both RSMs.
    #[arg(long)]
    pub subset: Option<PathBuf>,
    /// Noise ceiling in (0, 1]; variance explained is reported relative to it.
    #[arg(long)]
    pub noise_ceiling: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the two reconstructed RSMs as TSV into this directory.
    #[arg(long)]
    pub save_rsms: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MatchDimsArgs {
    #[arg(long)]
    pub source: PathBuf,
    #[arg(long)]
    pub target: PathBuf,
    #[arg(long)]
    pub with_replacement: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CumulativeRsaArgs {
    /// Embedding whose RSM is the target.
    #[arg(long, conflicts_with = "target_rsm")]
    pub target: Option<PathBuf>,
    /// Precomputed target RSM as a square TSV.
    #[arg(long)]
    pub target_rsm: Option<PathBuf>,
    #[arg(long)]
    pub source: PathBuf,
    /// File with one source column position per line (default: by column sum).
    #[arg(long)]
    pub ranking: Option<PathBuf>,
    #[arg(long, default_value = "auto")]
    pub mode: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct JackknifeArgs {
    #[arg(long)]
    pub embedding: PathBuf,
    #[arg(long)]
    pub triplets: PathBuf,
    #[arg(long, default_value = "pair-pair-odd")]
    pub column_order: String,
    /// Dimension labels keyed by embedding column position.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Per-triplet TSV of probabilities and winners.
    #[arg(long)]
    pub details: Option<PathBuf>,
    /// Second embedding; rank triplets by how much the two disagree.
    #[arg(long)]
    pub rank_by_divergence: Option<PathBuf>,
    /// How many divergent triplets to keep in the report.
    #[arg(long, default_value_t = 100)]
    pub top: usize,
}

#[derive(Debug, Args)]
pub struct RidgeArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub allow_raw: bool,
    #[arg(long)]
    pub embedding: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    /// Comma-separated penalty grid (default 1e-3,...,1e4).
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// TSV written by `cumulative-rsa`.
    #[arg(long)]
    pub cumulative: Option<PathBuf>,
    /// JSON written by `jackknife`.
    #[arg(long)]
    pub relevance: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 200)]
    pub objects: usize,
    #[arg(long, default_value_t = 10)]
    pub dims: usize,
    #[arg(long, default_value_t = 0.3)]
    pub density: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory for `meta.json`, `features.bin` and `truth.tsv`.
    #[arg(long)]
    pub out: PathBuf,
}

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Usage => 1,
        ErrorKind::Data => 2,
        ErrorKind::Numerical => 3,
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match parse(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let kind = e
                .chain()
                .find_map(|c| c.downcast_ref::<triplet_embed::Error>())
                .map(|c| c.kind())
                .unwrap_or(ErrorKind::Data);
            ExitCode::from(exit_code(kind))
        }
    }
}

/// Parses the command line, filling options that were not given from the
/// config file named by `--config`.
fn parse(argv: Vec<String>) -> Result<Cli, clap::Error> {
    let cmd = Cli::command();
    // Required options may come from the config file, so look for it first
    // with every option optional.
    let relaxed = cmd
        .clone()
        .mut_subcommands(|s| s.mut_args(|a| a.required(false)));
    let matches = relaxed.try_get_matches_from(&argv)?;
    let mut full = argv;
    if let Some(path) = matches.get_one::<PathBuf>("config") {
        let extra = config::args_from_file(path, &cmd, &matches)
            .map_err(|msg| Cli::command().error(clap::error::ErrorKind::InvalidValue, msg))?;
        full.extend(extra);
    }
    let matches = cmd.try_get_matches_from(&full)?;
    Cli::from_arg_matches(&matches)
}

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "fhmm", version, about = "Founder-haplotype HMM for SNP error detection, recovery and imputation")]
pub struct Cli {
    /// TOML file with default settings (falls back to $FHMM_CONFIG).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads; 1 runs everything serially.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Evaluate samples one by one instead of through the genotype tries.
    #[arg(long, global = true)]
    pub naive: bool,
    /// Write timing lines here instead of stderr.
    #[arg(long, global = true)]
    pub timing_log: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a founder model to a haplotype panel.
    Train(TrainCmd),
    /// Score every observed genotype by likelihood ratio.
    ///
    /// Columns: sample_id, locus_id, observed, ratio, flagged (0/1), suggested.
    Detect(DetectCmd),
    /// Apply the suggested values of flagged entries from a detect report.
    Correct(CorrectCmd),
    /// Fill missing genotypes with their posterior argmax.
    ///
    /// Fill report columns: sample_id, locus_id, value, confidence.
    Recover(RecoverCmd),
    /// Impute untyped loci with per-window founder models.
    ///
    /// Columns: sample_id, locus_id, call, confidence, p0, p1, p2.
    Impute(ImputeCmd),
    /// Decode the most probable haplotype pair of each sample.
    Phase(PhaseCmd),
    /// Run imputation, optionally after error correction and recovery.
    ///
    /// Output columns are those of `impute`.
    Pipeline(PipelineCmd),
    /// Write a synthetic dataset with ground truth.
    Simulate(SimulateCmd),
    /// Score calls against ground truth.
    Evaluate(EvaluateCmd),
    /// Accuracy over a grid of founders, panel sizes, flanks and modes.
    Sweep(SweepCmd),
    /// Time batched inference along one size axis.
    Bench(BenchCmd),
}

#[derive(Debug, Clone, Default, Args)]
pub struct TrainArgs {
    /// Number of founder haplotypes K.
    #[arg(long)]
    pub founders: Option<usize>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    /// Relative log-likelihood improvement that stops training.
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long)]
    pub pseudocount: Option<f64>,
    /// Diagonal weight of the starting transition matrices.
    #[arg(long)]
    pub initial_stay: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct WindowArgs {
    /// Typed loci on each side of an untyped gap.
    #[arg(long)]
    pub flank: Option<usize>,
    /// Training starts per window; the best fit is kept.
    #[arg(long)]
    pub restarts: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct OutArgs {
    /// Output path; stdout when absent.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainCmd {
    #[arg(long)]
    pub panel: PathBuf,
    #[command(flatten)]
    pub train: TrainArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct DetectCmd {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub genotypes: PathBuf,
    /// Locus map supplying typed locus ids; 1-based indices otherwise.
    #[arg(long)]
    pub map: Option<PathBuf>,
    /// Flag entries whose likelihood ratio exceeds this.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub json: bool,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct CorrectCmd {
    #[arg(long)]
    pub genotypes: PathBuf,
    /// Report written by `detect`.
    #[arg(long)]
    pub report: PathBuf,
    #[arg(long)]
    pub map: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct RecoverCmd {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub genotypes: PathBuf,
    #[arg(long)]
    pub map: Option<PathBuf>,
    /// Also write the fill report here.
    #[arg(long)]
    pub fills: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct ImputeCmd {
    /// Reference haplotypes over every map locus.
    #[arg(long)]
    pub panel: PathBuf,
    /// Genotypes over the typed loci.
    #[arg(long)]
    pub genotypes: PathBuf,
    #[arg(long)]
    pub map: PathBuf,
    #[command(flatten)]
    pub window: WindowArgs,
    #[command(flatten)]
    pub train: TrainArgs,
    #[arg(long)]
    pub json: bool,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct PhaseCmd {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub genotypes: PathBuf,
    /// Also write founder paths and log-probabilities here.
    #[arg(long)]
    pub paths: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct PipelineCmd {
    /// imp or edc-mdr-imp.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub panel: PathBuf,
    #[arg(long)]
    pub genotypes: PathBuf,
    #[arg(long)]
    pub map: PathBuf,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[command(flatten)]
    pub window: WindowArgs,
    #[command(flatten)]
    pub train: TrainArgs,
    /// Also write the genotypes fed to imputation here.
    #[arg(long)]
    pub repaired: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SimArgs {
    /// Founder haplotypes behind the simulated mosaics.
    #[arg(long = "sim-founders")]
    pub sim_founders: Option<usize>,
    #[arg(long)]
    pub loci: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub reference_haplotypes: Option<usize>,
    /// Probability of a founder switch between adjacent loci.
    #[arg(long)]
    pub switch_rate: Option<f64>,
    /// Per-symbol probability of replacing a genotype with another value.
    #[arg(long)]
    pub error_rate: Option<f64>,
    /// Per-symbol probability of blanking a genotype.
    #[arg(long)]
    pub missing_rate: Option<f64>,
    /// Fraction of loci relabeled untyped.
    #[arg(long)]
    pub mask_fraction: Option<f64>,
    #[arg(long)]
    pub maf_lo: Option<f64>,
    #[arg(long)]
    pub maf_hi: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SimulateCmd {
    #[command(flatten)]
    pub sim: SimArgs,
    /// Directory receiving truth.gen, observed.gen, loci.map, reference.hap,
    /// founders.hap, truth.hap, errors.tsv and missing.tsv.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateCmd {
    /// Genotypes over every map locus.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Needed for imputed calls and for typed-only genotype files.
    #[arg(long)]
    pub map: Option<PathBuf>,
    /// Imputation table to score.
    #[arg(long, conflicts_with_all = ["genotypes", "detections"])]
    pub calls: Option<PathBuf>,
    /// Genotype file to score.
    #[arg(long, conflicts_with = "detections")]
    pub genotypes: Option<PathBuf>,
    /// Restrict genotype scoring to these sites.
    #[arg(long, requires = "genotypes")]
    pub sites: Option<PathBuf>,
    /// Detect report scored against `--injected`.
    #[arg(long, requires = "injected")]
    pub detections: Option<PathBuf>,
    #[arg(long)]
    pub injected: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct SweepCmd {
    /// Model founder counts K.
    #[arg(long, value_delimiter = ',')]
    pub founders: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    pub panels: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    pub flanks: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    pub modes: Vec<String>,
    #[command(flatten)]
    pub sim: SimArgs,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long)]
    pub pseudocount: Option<f64>,
    #[arg(long)]
    pub initial_stay: Option<f64>,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub repetitions: Option<usize>,
    /// Plot data (rate against panel size per series).
    #[arg(long)]
    pub plot: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct BenchCmd {
    /// loci, samples or founders.
    #[arg(long)]
    pub axis: String,
    #[arg(long, value_delimiter = ',', required = true)]
    pub values: Vec<usize>,
    #[arg(long)]
    pub loci: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub founders: Option<usize>,
    #[arg(long)]
    pub repetitions: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub json: bool,
    #[command(flatten)]
    pub out: OutArgs,
}

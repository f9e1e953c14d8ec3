//! `wbpe`: train, partition, evaluate and compare WBP decoder ensembles.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

#[derive(Parser, Debug)]
#[command(name = "wbpe", version, about = "Ensembles of weighted belief-propagation decoders")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct CodeArgs {
    /// Code identifier, e.g. "CR-BCH(63,36)".
    #[arg(long, default_value = "CR-BCH(63,36)")]
    pub code: String,
    /// Parity-check matrix in alist format; the shipped matrix when omitted.
    #[arg(long)]
    pub alist: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (results do not depend on it).
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
}

#[derive(Args, Debug, Clone)]
pub struct TrainArgs {
    /// Training words, split equally over the SNR grid.
    #[arg(long, default_value_t = 100_000)]
    pub k: usize,
    /// Training SNR grid (Eb/N0 dB).
    #[arg(long, value_delimiter = ',', default_value = "4,5,6,7")]
    pub train_snr: Vec<f64>,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long, default_value_t = 1)]
    pub steps_per_epoch: usize,
    #[arg(long, default_value_t = 1000)]
    pub batch_per_snr: usize,
    /// Learning rate; 0.01 from scratch and 0.001 for finetuning by default.
    #[arg(long)]
    pub lr: Option<f64>,
    /// BP iterations T.
    #[arg(long, default_value_t = 5)]
    pub iterations: usize,
    /// Share weights across iterations.
    #[arg(long)]
    pub tied: bool,
    #[arg(long, default_value_t = 4000)]
    pub max_validation: usize,
    #[arg(long, default_value_t = 10)]
    pub patience: usize,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartitionKind {
    Hamming,
    Em,
    EmSyndrome,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gating {
    Single,
    All,
    Random,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Load and check a parity-check matrix; print its summary.
    LoadCode {
        #[command(flatten)]
        code: CodeArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train a single WBP decoder from scratch on the unpartitioned dataset.
    TrainBaseline {
        #[command(flatten)]
        code: CodeArgs,
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        train: TrainArgs,
        /// Weights file; metadata goes next to it with a .meta.json suffix.
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a partition of the error space.
    Partition {
        #[arg(value_enum)]
        kind: PartitionKind,
        #[command(flatten)]
        code: CodeArgs,
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 3)]
        alpha: usize,
        /// Words generated for fitting.
        #[arg(long, default_value_t = 100_000)]
        k: usize,
        #[arg(long, value_delimiter = ',', default_value = "4,5,6,7")]
        train_snr: Vec<f64>,
        #[arg(long, default_value_t = 5)]
        restarts: usize,
        #[arg(long, default_value_t = 200)]
        max_em_iterations: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one expert per region and write an ensemble manifest.
    TrainExperts {
        #[command(flatten)]
        code: CodeArgs,
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        train: TrainArgs,
        /// Partition file from `partition`.
        #[arg(long)]
        partition: PathBuf,
        /// Baseline weights to finetune from (Hamming partitions).
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Train from scratch even when baseline weights are given.
        #[arg(long)]
        from_scratch: bool,
        #[arg(long, value_enum, default_value_t = Gating::Single)]
        gating: Gating,
        /// Manifest path; expert files are written next to it.
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Monte Carlo FER/BER sweep of plain BP, one decoder or an ensemble.
    Eval {
        #[command(flatten)]
        code: CodeArgs,
        #[command(flatten)]
        common: CommonArgs,
        /// SNR points (Eb/N0 dB).
        #[arg(long, value_delimiter = ',', required = true)]
        snr: Vec<f64>,
        #[arg(long, default_value_t = 100)]
        min_errors: u64,
        #[arg(long, default_value_t = 10_000_000)]
        max_frames: u64,
        #[arg(long, default_value_t = 100)]
        shard_frames: u64,
        #[arg(long, default_value_t = 5)]
        iterations: usize,
        /// Single WBP decoder to evaluate.
        #[arg(long, conflicts_with = "manifest")]
        weights: Option<PathBuf>,
        /// Ensemble manifest to evaluate.
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Overrides the manifest's gating mode.
        #[arg(long, value_enum)]
        gating: Option<Gating>,
        /// Transmit random codewords instead of the zero word.
        #[arg(long)]
        random_codewords: bool,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Compare two result files (a then b; positive gain means b is better).
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// EM on errors drawn from BSCs at Q(1/sigma) for each SNR.
    Prop1 {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_delimiter = ',', default_value = "4,5,6")]
        snr: Vec<f64>,
        /// Code rate used to convert SNR to sigma.
        #[arg(long, default_value_t = 36.0 / 63.0)]
        rate: f64,
        #[arg(long, default_value_t = 100_000)]
        k: usize,
        #[arg(long, default_value_t = 63)]
        v: usize,
        #[arg(long, default_value_t = 5)]
        restarts: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Plant errors up to the correction radius and check every one is fixed.
    HddSelftest {
        #[command(flatten)]
        code: CodeArgs,
        #[command(flatten)]
        common: CommonArgs,
        /// Random patterns per weight.
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn error_line(kind: &str, message: &str) -> String {
    serde_json::json!({ "error": { "kind": kind, "message": message } }).to_string()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{}", error_line("usage", e.to_string().trim()));
            return ExitCode::from(2);
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_line(e.kind, &e.message));
            ExitCode::FAILURE
        }
    }
}

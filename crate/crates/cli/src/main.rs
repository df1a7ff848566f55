//! `latmat`: Beta-CDF probes, annotation agreement, label noise, COCO
//! evaluation and the toy noise experiment from one binary.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Exit code for bad flags, unreadable or invalid inputs.
pub const EXIT_INPUT: u8 = 2;
/// Exit code for failures while running (divergence, unwritable outputs).
pub const EXIT_RUNTIME: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "latmat", version, about = "Interval-censored maturity classification toolkit")]
pub struct Cli {
    /// Output format for results written to stdout.
    #[arg(long, value_enum, global = true, default_value_t = Format::Text)]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Class probabilities, density and CDF of a Beta(alpha, beta).
    Beta(BetaArgs),
    /// Match two annotation files and report the label confusion.
    Agree(AgreeArgs),
    /// Move a fraction of labels to an adjacent class.
    Noisify(NoisifyArgs),
    /// COCO-style mAP50, mAP50-95 and AR@100 of a detection file.
    Eval(EvalArgs),
    /// Clean-vs-noisy accuracy of the Beta and softmax heads on synthetic data.
    TrainToy(TrainToyArgs),
    /// Synthetic baseline and two jittered annotators plus their agreement.
    Simulate(SimulateArgs),
    /// Seeded random split of an annotation file by image.
    Split(SplitArgs),
}

#[derive(Debug, Args)]
pub struct CutsArg {
    /// Interior class cut points, comma separated (default: equal thirds).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub cuts: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct BetaArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: f64,
    #[command(flatten)]
    pub cuts: CutsArg,
    /// Points at which to print the density and CDF.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct ClassOrderArg {
    /// Category ids in class order, overriding ascending id order.
    #[arg(long, value_delimiter = ',')]
    pub class_order: Option<Vec<u64>>,
}

#[derive(Debug, Args)]
pub struct AgreeArgs {
    /// Reference labels (confusion rows).
    #[arg(long)]
    pub reference: PathBuf,
    /// Compared labels (confusion columns).
    #[arg(long)]
    pub target: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    pub iou: f64,
    #[command(flatten)]
    pub class_order: ClassOrderArg,
}

#[derive(Debug, Args)]
pub struct NoisifyArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 0.10)]
    pub rate: f64,
    #[arg(long)]
    pub seed: u64,
    /// Apply the rate within each class instead of globally.
    #[arg(long)]
    pub per_class: bool,
    /// Noisy file (default: `<out-dir>/<input stem>.noisy.json`).
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Flip log CSV (default: next to the output, `.flips.csv`).
    #[arg(long)]
    pub flip_log: Option<PathBuf>,
    #[command(flatten)]
    pub out_dir: OutDirArg,
    #[command(flatten)]
    pub class_order: ClassOrderArg,
}

#[derive(Debug, Args)]
pub struct OutDirArg {
    /// Directory for outputs without an explicit path.
    #[arg(long, env = "LATMAT_OUT_DIR", default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Detections: annotation file with a score on every annotation.
    #[arg(long)]
    pub detections: PathBuf,
    #[arg(long)]
    pub ground_truth: PathBuf,
    #[command(flatten)]
    pub class_order: ClassOrderArg,
}

#[derive(Debug, Args)]
pub struct TrainToyArgs {
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.10)]
    pub noise_rate: f64,
    /// Number of paired seeds (seed, seed + 1, ...).
    #[arg(long, default_value_t = 10)]
    pub seeds: usize,
    /// JSON training config; flags below override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Hidden layer widths, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub hidden: Option<Vec<usize>>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub feature_noise: Option<f64>,
    #[arg(long)]
    pub distractors: Option<usize>,
    #[arg(long)]
    pub n_train: Option<usize>,
    #[arg(long)]
    pub n_val: Option<usize>,
    #[arg(long)]
    pub n_test: Option<usize>,
    #[command(flatten)]
    pub cuts: CutsArg,
    /// Also write the JSON report here.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 5000)]
    pub n_fruits: usize,
    /// Standard deviation of the per-decision cut jitter.
    #[arg(long, default_value_t = 0.05)]
    pub jitter: f64,
    #[arg(long, default_value_t = 0.5)]
    pub iou: f64,
    #[command(flatten)]
    pub cuts: CutsArg,
    #[command(flatten)]
    pub out_dir: OutDirArg,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub seed: u64,
    /// Fraction of images in the first part.
    #[arg(long, default_value_t = 0.5)]
    pub fraction: f64,
    /// First part (default: `<out-dir>/<input stem>.part1.json`).
    #[arg(long)]
    pub first: Option<PathBuf>,
    /// Second part (default: `<out-dir>/<input stem>.part2.json`).
    #[arg(long)]
    pub second: Option<PathBuf>,
    #[command(flatten)]
    pub out_dir: OutDirArg,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

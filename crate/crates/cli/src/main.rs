mod commands;
mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "stvqc", version, about = "Spatial-temporal variational quantum classifiers: data, training, search, compilation")]
#[command(args_override_self = true)]
pub struct Cli {
    /// Seed for every random choice made by the command.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// TOML file with flag values; explicit flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, env = "STVQC_OUT", default_value = "out")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a (θ, φ) dataset with CSV splits and a manifest.
    GenData(GenDataArgs),
    /// Train a classifier and write its report and checkpoint.
    Train(TrainArgs),
    /// Search encoder, ansatz and placement designs.
    Search(SearchArgs),
    /// Route a QASM circuit onto a device and report gate metrics.
    Compile(CompileArgs),
    /// Evaluate a checkpoint, optionally under noise.
    Eval(EvalArgs),
    /// Accuracy table of the linear, MLP, VQC and ST-VQC models over generated sets.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
pub struct GenDataArgs {
    /// Dataset id: L1, L2, N1..N6.
    #[arg(long)]
    pub id: String,
    #[arg(long, default_value_t = 1600)]
    pub n_train: usize,
    #[arg(long, default_value_t = 320)]
    pub n_test: usize,
}

#[derive(Args, Debug, Clone)]
pub struct DataArgs {
    /// Dataset manifest JSON, or a directory of MNIST IDX files.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Digits kept from image data, in label order.
    #[arg(long, value_delimiter = ',', default_values_t = [3u8, 6])]
    pub digits: Vec<u8>,
    /// Pooled image size `WxH`.
    #[arg(long, default_value = "4x4")]
    pub pool: String,
}

#[derive(Args, Debug, Clone)]
pub struct NoiseArgs {
    /// Add a noisy, shot-sampled evaluation.
    #[arg(long)]
    pub noisy: bool,
    #[arg(long, default_value_t = 0.001)]
    pub p1: f64,
    #[arg(long, default_value_t = 0.01)]
    pub p2: f64,
    #[arg(long, default_value_t = 0.02)]
    pub p_ro: f64,
    #[arg(long, default_value_t = 8192)]
    pub shots: usize,
    /// Device (`lima`, `heavyhex27`, `line:N`, or a JSON file) for compiled noisy runs.
    #[arg(long)]
    pub topology: Option<String>,
    /// Evaluate on at most this many test samples.
    #[arg(long)]
    pub limit: Option<usize>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum EncoderChoice {
    Bloch,
    Spatial,
    Amplitude,
    Angle,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum AnsatzChoice {
    Tree,
    Vqc,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockChoice {
    Ring,
    Chain,
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    /// Model JSON (a spec, or a design written by `search`); replaces the flags below.
    #[arg(long)]
    pub model_file: Option<PathBuf>,
    /// Defaults to `bloch` for (θ, φ) data and `spatial` for images.
    #[arg(long, value_enum)]
    pub encoder: Option<EncoderChoice>,
    /// Copies of the Bloch state.
    #[arg(long, default_value_t = 2)]
    pub copies: usize,
    /// Spatial window `w,h,s`.
    #[arg(long, value_delimiter = ',', default_values_t = [2usize, 2, 2])]
    pub group: Vec<usize>,
    /// Copies per spatial group; defaults to one each.
    #[arg(long, value_delimiter = ',')]
    pub dup: Option<Vec<usize>>,
    /// Angle-encoding scheme such as `4x4_ryzxy`.
    #[arg(long, default_value = "4x4_ryzxy")]
    pub scheme: String,
    #[arg(long, value_enum, default_value_t = AnsatzChoice::Tree)]
    pub ansatz: AnsatzChoice,
    /// Block repeats per tree level, leaves first. Defaults to one per level plus two at the top.
    #[arg(long, value_delimiter = ',')]
    pub layers: Option<Vec<usize>>,
    /// Blocks of the flat VQC ansatz.
    #[arg(long, default_value_t = 1)]
    pub blocks: usize,
    #[arg(long, value_enum, default_value_t = BlockChoice::Ring)]
    pub block_kind: BlockChoice,
}

#[derive(Args, Debug, Clone)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
}

#[derive(Args, Debug, Clone)]
pub struct SearchArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 60)]
    pub episodes: usize,
    /// Segments the controller explores: spatial, duplication, layer, physical.
    #[arg(long, value_delimiter = ',')]
    pub segments: Option<Vec<String>>,
    /// Device (`lima`, `heavyhex27`, `line:N`, or a JSON file).
    #[arg(long, default_value = "lima")]
    pub topology: String,
    /// Uniform random sampling instead of the controller.
    #[arg(long)]
    pub random: bool,
    #[arg(long, default_value_t = 3)]
    pub max_copies: usize,
    #[arg(long, value_delimiter = ',', default_values_t = [0usize, 1, 2, 3])]
    pub layer_choices: Vec<usize>,
    /// Spatial windows for image data, `WxHxS`.
    #[arg(long, value_delimiter = ',', default_values_t = ["2x2x2".to_string(), "4x4x1".to_string()])]
    pub windows: Vec<String>,
    /// Candidates kept per placement size.
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    /// Training epochs per episode.
    #[arg(long, default_value_t = 25)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.5)]
    pub rho: f64,
    /// Shots for the noisy validation accuracy.
    #[arg(long, default_value_t = 256)]
    pub shots: usize,
    /// Reward on ideal accuracy instead of noisy validation.
    #[arg(long)]
    pub ideal: bool,
    #[arg(long)]
    pub max_train: Option<usize>,
    #[arg(long)]
    pub max_val: Option<usize>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    Naive,
    SwapFree,
}

#[derive(Args, Debug, Clone)]
pub struct CompileArgs {
    /// OpenQASM 2.0 file.
    #[arg(long)]
    pub circuit: PathBuf,
    /// Device (`lima`, `heavyhex27`, `line:N`, or a JSON file).
    #[arg(long, default_value = "lima")]
    pub topology: String,
    #[arg(long, value_enum, default_value_t = Strategy::Naive)]
    pub strategy: Strategy,
    /// Initial logical-to-physical mapping for `naive`; identity by default.
    #[arg(long, value_delimiter = ',')]
    pub mapping: Option<Vec<usize>>,
}

#[derive(Args, Debug, Clone)]
pub struct EvalArgs {
    /// Checkpoint written by `train`.
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub noise: NoiseArgs,
}

#[derive(Args, Debug, Clone)]
pub struct ReportArgs {
    #[arg(long, value_delimiter = ',', default_values_t = ["L1", "L2", "N1", "N2", "N3", "N4", "N5", "N6"].map(String::from))]
    pub ids: Vec<String>,
    /// Seeds 0..N per dataset.
    #[arg(long, default_value_t = 5)]
    pub seeds: u64,
    #[arg(long, default_value_t = 50)]
    pub epochs: usize,
    #[arg(long, default_value_t = 1600)]
    pub n_train: usize,
    #[arg(long, default_value_t = 320)]
    pub n_test: usize,
}

fn main() {
    let run = || -> anyhow::Result<()> {
        let args = config::expand(std::env::args_os().collect())?;
        let cli = Cli::parse_from(args);
        if let Some(jobs) = cli.jobs {
            rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global()?;
        }
        commands::run(&cli)
    };
    if let Err(e) = run() {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

//! `topocomp`: ingest traffic traces, train compressors, compress and
//! decompress windows, and evaluate reconstructions.

mod commands;
mod config;
mod failure;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use failure::{Failure, EXIT_CONFIG};

#[derive(Parser, Debug)]
#[command(name = "topocomp", version, about = "Lossy compression of network link signals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Window, normalize and split a trace into a dataset directory.
    Ingest(IngestArgs),
    /// Train a model and write its best-validation checkpoint.
    Train(TrainArgs),
    /// Compress one window into a binary artifact.
    Compress(CompressArgs),
    /// Reconstruct a window from an artifact.
    Decompress(DecompressArgs),
    /// Report MSE and MAE per split.
    Eval(EvalArgs),
}

#[derive(Args, Debug)]
pub struct IngestArgs {
    /// TOML file with defaults for any option.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// SNDlib network XML.
    #[arg(long)]
    pub sndlib: Option<PathBuf>,
    /// Directory of SNDlib demand XML files, one per interval.
    #[arg(long)]
    pub demands: Option<PathBuf>,
    /// Link series CSV (header of link names, one row per interval).
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Built-in synthetic trace: abilene or geant.
    #[arg(long)]
    pub synthetic: Option<String>,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dataset directory written by `ingest`.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// setmp, combmp, mpnn or mlp_ae.
    #[arg(long)]
    pub model: Option<String>,
    /// Target compression factor, e.g. 1/3.
    #[arg(long)]
    pub rc: Option<String>,
    #[arg(long)]
    pub p: Option<usize>,
    /// Hidden state width d'.
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub dvc: Option<usize>,
    #[arg(long)]
    pub dwc: Option<usize>,
    /// CombMP rounds.
    #[arg(long = "T", alias = "rounds")]
    pub rounds: Option<usize>,
    /// MPNN code width.
    #[arg(long)]
    pub final_dim: Option<usize>,
    /// Auto-encoder hidden widths, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub ae_hidden: Option<Vec<usize>>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory for model.ckpt, history.jsonl and summary.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CompressArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Raw window CSV: `link,x0,..` with one row per link.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Dataset directory; use with --index instead of --input.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Window index in the dataset.
    #[arg(long)]
    pub index: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Expected artifact format version.
    #[arg(long)]
    pub format_version: Option<u16>,
}

#[derive(Args, Debug)]
pub struct DecompressArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub artifact: Option<PathBuf>,
    /// Reconstruction CSV in raw units.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// train, val, test or all.
    #[arg(long)]
    pub split: Option<String>,
    /// Reconstructions from an external tool (normalized, `window,link,x0,..`).
    #[arg(long)]
    pub external: Option<PathBuf>,
    /// Also write this model's reconstructions of the split in the external format.
    #[arg(long)]
    pub write_recon: Option<PathBuf>,
    /// Report JSON path.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Ingest(a) => commands::ingest(a),
        Command::Train(a) => commands::train(a),
        Command::Compress(a) => commands::compress(a),
        Command::Decompress(a) => commands::decompress(a),
        Command::Eval(a) => commands::eval(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code as u8)
        }
    }
}

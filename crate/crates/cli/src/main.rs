//! `tilesr`: prepare patch datasets, train the residual super-resolution
//! model, evaluate against interpolation baselines, and produce reports.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tilesr_cli::commands;

#[derive(Parser)]
#[command(
    name = "tilesr",
    about = "Tiled-image super-resolution: dataset preparation, training, evaluation, inference",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cut source images into overlapping patches and write (hr, lr)
    /// pairs plus a manifest.
    Prepare {
        /// Directory of source raster images.
        #[arg(long)]
        src_dir: PathBuf,
        /// Output dataset directory.
        #[arg(long)]
        out_dir: PathBuf,
        /// Patch side length in pixels.
        #[arg(long, default_value_t = 256)]
        size: usize,
        /// Step between patch origins.
        #[arg(long, default_value_t = 128)]
        stride: usize,
        /// Downsample factor for the lr counterparts (4 or 8).
        #[arg(long)]
        scale: usize,
        /// Fraction of patches assigned to the test split.
        #[arg(long, default_value_t = 0.2)]
        split_fraction: f64,
        /// Seed for the split assignment.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Train from a key-value config file; writes checkpoint.ckpt and
    /// training_log.csv into the configured out_dir.
    Train {
        /// Path to the run configuration file.
        #[arg(long)]
        config: PathBuf,
    },
    /// Evaluate a checkpoint on the dataset's test split.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data_dir: PathBuf,
        /// Where the metrics CSVs are written.
        #[arg(long)]
        out_dir: PathBuf,
        /// Interpolation baseline to evaluate alongside the model.
        #[arg(long, default_value = "bicubic")]
        baseline: String,
        /// SSIM variant: windowed (default) or global.
        #[arg(long, default_value = "windowed")]
        ssim: String,
    },
    /// Super-resolve one image.
    Infer {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Stitch a directory of patches (lexicographic order, row-major)
    /// into one grid image.
    Stitch {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, default_value_t = 4)]
        rows: usize,
        #[arg(long, default_value_t = 4)]
        cols: usize,
        #[arg(long)]
        output: PathBuf,
    },
    /// Write [hr | baseline | model] montages with (SSIM/PSNR) captions.
    Report {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data_dir: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 3)]
        n_examples: usize,
        #[arg(long, default_value = "bicubic")]
        baseline: String,
    },
    /// Measure inference latency per patch.
    Bench {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Number of timed forward passes.
        #[arg(long)]
        n: usize,
        /// Low-res input height (default: 256 / scale).
        #[arg(long)]
        lr_height: Option<usize>,
        /// Low-res input width (default: 256 / scale).
        #[arg(long)]
        lr_width: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Prepare {
            src_dir,
            out_dir,
            size,
            stride,
            scale,
            split_fraction,
            seed,
        } => commands::prepare::run(&commands::prepare::PrepareArgs {
            src_dir,
            out_dir,
            size,
            stride,
            scale,
            split_fraction,
            seed,
        }),
        Command::Train { config } => commands::train::run(&config),
        Command::Eval {
            checkpoint,
            data_dir,
            out_dir,
            baseline,
            ssim,
        } => commands::eval::run(&commands::eval::EvalArgs {
            checkpoint,
            data_dir,
            out_dir,
            baseline,
            ssim,
        }),
        Command::Infer {
            checkpoint,
            input,
            output,
        } => commands::infer::run(&checkpoint, &input, &output),
        Command::Stitch {
            dir,
            rows,
            cols,
            output,
        } => commands::stitch::run(&dir, rows, cols, &output),
        Command::Report {
            checkpoint,
            data_dir,
            out_dir,
            n_examples,
            baseline,
        } => commands::report::run(&commands::report::ReportArgs {
            checkpoint,
            data_dir,
            out_dir,
            n_examples,
            baseline,
        }),
        Command::Bench {
            checkpoint,
            n,
            lr_height,
            lr_width,
        } => {
            let dims = match (lr_height, lr_width) {
                (Some(h), Some(w)) => Some((h, w)),
                (None, None) => None,
                (Some(s), None) | (None, Some(s)) => Some((s, s)),
            };
            commands::bench::run(&checkpoint, n, dims)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

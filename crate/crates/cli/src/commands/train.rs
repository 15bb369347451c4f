//! Training entry point: config file in, checkpoint and log CSV out.

use std::path::Path;

use anyhow::{Context, Result};
use tilesr_core::model::save_checkpoint;
use tilesr_core::train::train;

use crate::config::RunConfig;
use crate::dataset_io::load_dataset;

pub fn run(config_path: &Path) -> Result<()> {
    let config = RunConfig::load(config_path)?;
    if !config.data_dir.exists() {
        anyhow::bail!(
            "data_dir {} does not exist (run `prepare` first)",
            config.data_dir.display()
        );
    }
    let pairs = load_dataset(&config.data_dir, config.model.scale)?;
    let (checkpoint, log) = train(&pairs, &config.model, &config.train)?;

    std::fs::create_dir_all(&config.out_dir)
        .with_context(|| format!("creating {}", config.out_dir.display()))?;
    let ckpt_path = config
        .checkpoint
        .clone()
        .unwrap_or_else(|| config.out_dir.join("checkpoint.ckpt"));
    save_checkpoint(&checkpoint, &ckpt_path)?;
    let log_path = config.out_dir.join("training_log.csv");
    log.save_csv(&log_path)?;

    let last = log.rows.last().expect("log always has the initial row");
    println!(
        "trained {} epochs ({} steps); final loss {:.6}, val ssim {:.4}, val psnr {:.2} dB",
        checkpoint.training_meta.epochs_completed,
        last.step,
        last.train_wfe_loss,
        last.val_ssim,
        last.val_psnr
    );
    println!("checkpoint: {}", ckpt_path.display());
    println!("log: {}", log_path.display());
    Ok(())
}

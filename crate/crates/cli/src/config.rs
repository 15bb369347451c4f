//! Flat key-value run configuration.
//!
//! Grammar: one `key = value` per line; `#` starts a comment; blank lines
//! are ignored. Unknown keys are rejected. Paths are resolved relative to
//! the current working directory.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use tilesr_core::model::ModelConfig;
use tilesr_core::train::TrainConfig;

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub data_dir: PathBuf,
    pub out_dir: PathBuf,
    pub checkpoint: Option<PathBuf>,
    pub model: ModelConfig,
    pub train: TrainConfig,
}

const KNOWN_KEYS: [&str; 14] = [
    "data_dir",
    "out_dir",
    "checkpoint",
    "scale",
    "depth",
    "base_channels",
    "attention_enabled",
    "zero_init_final",
    "batch_size",
    "learning_rate",
    "epochs",
    "seed",
    "wfe_alpha",
    "val_interval",
];

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut data_dir = None;
        let mut out_dir = None;
        let mut checkpoint = None;
        let mut scale = 4usize;
        let mut depth = None;
        let mut base_channels = None;
        let mut attention_enabled = None;
        let mut zero_init_final = None;
        let mut batch_size = None;
        let mut learning_rate = None;
        let mut epochs = None;
        let mut seed = None;
        let mut wfe_alpha = None;
        let mut val_interval = None;
        let mut seen = BTreeSet::new();

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!("line {}: expected `key = value`, got `{raw}`", lineno + 1);
            };
            let key = key.trim();
            let value = value.trim();
            if !KNOWN_KEYS.contains(&key) {
                bail!("line {}: unknown key `{key}`", lineno + 1);
            }
            if !seen.insert(key.to_string()) {
                bail!("line {}: duplicate key `{key}`", lineno + 1);
            }
            let ctx = |what: &str| format!("line {}: invalid {what} `{value}`", lineno + 1);
            match key {
                "data_dir" => data_dir = Some(PathBuf::from(value)),
                "out_dir" => out_dir = Some(PathBuf::from(value)),
                "checkpoint" => checkpoint = Some(PathBuf::from(value)),
                "scale" => scale = value.parse().with_context(|| ctx("scale"))?,
                "depth" => depth = Some(value.parse().with_context(|| ctx("depth"))?),
                "base_channels" => {
                    base_channels = Some(value.parse().with_context(|| ctx("base_channels"))?)
                }
                "attention_enabled" => {
                    attention_enabled = Some(parse_bool(value).with_context(|| ctx("flag"))?)
                }
                "zero_init_final" => {
                    zero_init_final = Some(parse_bool(value).with_context(|| ctx("flag"))?)
                }
                "batch_size" => batch_size = Some(value.parse().with_context(|| ctx("batch_size"))?),
                "learning_rate" => {
                    learning_rate = Some(value.parse().with_context(|| ctx("learning_rate"))?)
                }
                "epochs" => epochs = Some(value.parse().with_context(|| ctx("epochs"))?),
                "seed" => seed = Some(value.parse().with_context(|| ctx("seed"))?),
                "wfe_alpha" => wfe_alpha = Some(value.parse().with_context(|| ctx("wfe_alpha"))?),
                "val_interval" => {
                    val_interval = Some(value.parse().with_context(|| ctx("val_interval"))?)
                }
                _ => unreachable!("key membership checked above"),
            }
        }

        let Some(data_dir) = data_dir else {
            bail!("missing required key `data_dir`");
        };
        let Some(out_dir) = out_dir else {
            bail!("missing required key `out_dir`");
        };

        let defaults = ModelConfig::default();
        let model = ModelConfig {
            scale,
            depth: depth.unwrap_or(defaults.depth),
            base_channels: base_channels.unwrap_or(defaults.base_channels),
            attention_enabled: attention_enabled.unwrap_or(defaults.attention_enabled),
            zero_init_final: zero_init_final.unwrap_or(defaults.zero_init_final),
        };
        let train_defaults = TrainConfig::defaults_for_scale(scale);
        let train = TrainConfig {
            batch_size: batch_size.unwrap_or(train_defaults.batch_size),
            learning_rate: learning_rate.unwrap_or(train_defaults.learning_rate),
            epochs: epochs.unwrap_or(train_defaults.epochs),
            seed: seed.unwrap_or(train_defaults.seed),
            wfe_alpha: wfe_alpha.unwrap_or(train_defaults.wfe_alpha),
            val_interval: val_interval.unwrap_or(train_defaults.val_interval),
            ..train_defaults
        };
        model.validate()?;
        train.validate()?;
        Ok(RunConfig {
            data_dir,
            out_dir,
            checkpoint,
            model,
            train,
        })
    }
}

fn parse_bool(value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => bail!("expected true/false, got `{other}`"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_config_with_comments() {
        let cfg = RunConfig::parse(
            "# run settings\n\
             data_dir = data/prepared\n\
             out_dir = runs/a   # artifacts land here\n\
             scale = 8\n\
             depth = 2\n\
             base_channels = 16\n\
             attention_enabled = false\n\
             batch_size = 4\n\
             learning_rate = 1e-4\n\
             epochs = 3\n\
             seed = 11\n\
             wfe_alpha = 0.5\n\
             val_interval = 10\n",
        )
        .unwrap();
        assert_eq!(cfg.model.scale, 8);
        assert_eq!(cfg.model.depth, 2);
        assert!(!cfg.model.attention_enabled);
        assert_eq!(cfg.train.batch_size, 4);
        assert_eq!(cfg.train.epochs, 3);
        assert_eq!(cfg.train.learning_rate, 1e-4);
    }

    #[test]
    fn scale_selects_default_epochs() {
        let x4 = RunConfig::parse("data_dir=a\nout_dir=b\nscale=4\n").unwrap();
        assert_eq!(x4.train.epochs, 4);
        let x8 = RunConfig::parse("data_dir=a\nout_dir=b\nscale=8\n").unwrap();
        assert_eq!(x8.train.epochs, 6);
        assert_eq!(x8.train.batch_size, 2);
        assert_eq!(x8.train.learning_rate, 3e-6);
    }

    #[test]
    fn unknown_keys_are_rejected_by_name() {
        let err = RunConfig::parse("data_dir=a\nout_dir=b\nlearning=1\n").unwrap_err();
        assert!(err.to_string().contains("unknown key `learning`"));
    }

    #[test]
    fn missing_paths_are_reported_by_name() {
        let err = RunConfig::parse("out_dir=b\n").unwrap_err();
        assert!(err.to_string().contains("data_dir"));
        let err = RunConfig::parse("data_dir=a\n").unwrap_err();
        assert!(err.to_string().contains("out_dir"));
    }

    #[test]
    fn duplicate_keys_are_rejected() {
        let err = RunConfig::parse("data_dir=a\nout_dir=b\nseed=1\nseed=2\n").unwrap_err();
        assert!(err.to_string().contains("duplicate key `seed`"));
    }
}

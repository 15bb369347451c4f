//! Checkpoint container and its little-endian binary file format.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic            8 bytes  "TILESRCK"
//! format_version   u32      currently 1
//! scalar_width     u8       bytes per stored scalar (8 = f64)
//! scale            u32
//! depth            u32
//! base_channels    u32
//! attention        u8       0 or 1
//! zero_init_final  u8       0 or 1
//! epochs_completed u64
//! final_train_loss f64
//! seed             u64
//! param_count      u32
//! per parameter:
//!   name_len u32, name bytes (UTF-8),
//!   ndim u32, dims u64 each,
//!   values f64 each (bit-exact)
//! ```

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::unet::{validate_parameters, ModelConfig, ParamEntry, Parameters};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"TILESRCK";
pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingMeta {
    pub epochs_completed: u64,
    pub final_train_loss: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub format_version: u32,
    pub config: ModelConfig,
    pub parameters: Parameters,
    pub training_meta: TrainingMeta,
}

impl Checkpoint {
    pub fn new(config: ModelConfig, parameters: Parameters, training_meta: TrainingMeta) -> Self {
        Self {
            format_version: CHECKPOINT_FORMAT_VERSION,
            config,
            parameters,
            training_meta,
        }
    }
}

pub fn save_checkpoint(ckpt: &Checkpoint, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| Error::io(path, e);
    w.write_all(MAGIC).map_err(io_err)?;
    w.write_all(&ckpt.format_version.to_le_bytes()).map_err(io_err)?;
    w.write_all(&[8u8]).map_err(io_err)?;
    w.write_all(&(ckpt.config.scale as u32).to_le_bytes()).map_err(io_err)?;
    w.write_all(&(ckpt.config.depth as u32).to_le_bytes()).map_err(io_err)?;
    w.write_all(&(ckpt.config.base_channels as u32).to_le_bytes())
        .map_err(io_err)?;
    w.write_all(&[ckpt.config.attention_enabled as u8]).map_err(io_err)?;
    w.write_all(&[ckpt.config.zero_init_final as u8]).map_err(io_err)?;
    w.write_all(&ckpt.training_meta.epochs_completed.to_le_bytes())
        .map_err(io_err)?;
    w.write_all(&ckpt.training_meta.final_train_loss.to_le_bytes())
        .map_err(io_err)?;
    w.write_all(&ckpt.training_meta.seed.to_le_bytes()).map_err(io_err)?;
    w.write_all(&(ckpt.parameters.entries.len() as u32).to_le_bytes())
        .map_err(io_err)?;
    for entry in &ckpt.parameters.entries {
        let name = entry.name.as_bytes();
        w.write_all(&(name.len() as u32).to_le_bytes()).map_err(io_err)?;
        w.write_all(name).map_err(io_err)?;
        w.write_all(&(entry.shape.len() as u32).to_le_bytes()).map_err(io_err)?;
        for &d in &entry.shape {
            w.write_all(&(d as u64).to_le_bytes()).map_err(io_err)?;
        }
        for &v in &entry.data {
            w.write_all(&v.to_le_bytes()).map_err(io_err)?;
        }
    }
    w.flush().map_err(io_err)
}

struct Reader<R> {
    inner: R,
    path: String,
}

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.inner.read_exact(&mut buf).map_err(|_| {
            Error::Checkpoint(format!("{}: file truncated or corrupt", self.path))
        })?;
        Ok(buf)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.bytes::<1>()?[0])
    }
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = Reader {
        inner: BufReader::new(file),
        path: path.display().to_string(),
    };
    let magic: [u8; 8] = r.bytes()?;
    if &magic != MAGIC {
        return Err(Error::Checkpoint(format!(
            "{}: not a checkpoint file (bad magic)",
            r.path
        )));
    }
    let format_version = r.u32()?;
    if format_version != CHECKPOINT_FORMAT_VERSION {
        return Err(Error::Checkpoint(format!(
            "{}: format version {format_version} unsupported (expected {CHECKPOINT_FORMAT_VERSION})",
            r.path
        )));
    }
    let scalar_width = r.u8()?;
    if scalar_width != 8 {
        return Err(Error::Checkpoint(format!(
            "{}: scalar width {scalar_width} unsupported",
            r.path
        )));
    }
    let config = ModelConfig {
        scale: r.u32()? as usize,
        depth: r.u32()? as usize,
        base_channels: r.u32()? as usize,
        attention_enabled: r.u8()? != 0,
        zero_init_final: r.u8()? != 0,
    };
    let training_meta = TrainingMeta {
        epochs_completed: r.u64()?,
        final_train_loss: r.f64()?,
        seed: r.u64()?,
    };
    let count = r.u32()? as usize;
    let mut entries = Vec::with_capacity(count);
    for _ in 0..count {
        let name_len = r.u32()? as usize;
        if name_len > 4096 {
            return Err(Error::Checkpoint(format!(
                "{}: implausible parameter name length {name_len}",
                r.path
            )));
        }
        let mut name_buf = vec![0u8; name_len];
        r.inner.read_exact(&mut name_buf).map_err(|_| {
            Error::Checkpoint(format!("{}: file truncated or corrupt", r.path))
        })?;
        let name = String::from_utf8(name_buf)
            .map_err(|_| Error::Checkpoint(format!("{}: parameter name not UTF-8", r.path)))?;
        let ndim = r.u32()? as usize;
        if ndim > 8 {
            return Err(Error::Checkpoint(format!(
                "{}: implausible rank {ndim} for {name}",
                r.path
            )));
        }
        let mut shape = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            shape.push(r.u64()? as usize);
        }
        let numel: usize = shape.iter().product();
        let mut data = Vec::with_capacity(numel);
        for _ in 0..numel {
            data.push(r.f64()?);
        }
        entries.push(ParamEntry { name, shape, data });
    }
    let parameters = Parameters { entries };
    config.validate()?;
    validate_parameters(&config, &parameters)?;
    if !parameters.all_finite() {
        return Err(Error::Checkpoint(format!(
            "{}: parameters contain non-finite values",
            r.path
        )));
    }
    Ok(Checkpoint {
        format_version,
        config,
        parameters,
        training_meta,
    })
}

use thiserror::Error;

/// Errors shared across the pipeline. Every variant names the offending
/// input so CLI output stays actionable.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{axis} = {len} is not divisible by {divisor}")]
    NotDivisible {
        axis: &'static str,
        len: usize,
        divisor: usize,
    },

    #[error("shape mismatch in {context}: {left} vs {right}")]
    ShapeMismatch {
        context: String,
        left: String,
        right: String,
    },

    #[error("{what} is too small: {actual} < required {required}")]
    TooSmall {
        what: &'static str,
        actual: usize,
        required: usize,
    },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("loss is not finite at step {step}; aborting")]
    NonFiniteLoss { step: u64 },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("image codec error on {path}: {source}")]
    Codec {
        path: String,
        #[source]
        source: image::ImageError,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

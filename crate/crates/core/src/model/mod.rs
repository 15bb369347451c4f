//! Residual correction model: bilinear baseline + attention U-Net.

pub mod checkpoint;
pub mod layers;
pub mod tensor;
pub mod unet;

pub use checkpoint::{
    load_checkpoint, save_checkpoint, Checkpoint, TrainingMeta, CHECKPOINT_FORMAT_VERSION,
};
pub use tensor::Tensor;
pub use unet::{
    attention_gate, backward_pass, forward_pass, init_parameters, model_forward, parameter_count,
    parameter_plan, validate_parameters, ForwardPass, GateParams, ModelConfig, ParamEntry,
    Parameters, IMAGE_CHANNELS,
};

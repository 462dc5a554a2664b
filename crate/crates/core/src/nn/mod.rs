//! Tiny CNN: tensors, the single- and dual-feature architectures, exact
//! backpropagation, a deterministic training loop and float checkpoints.

pub(crate) mod checkpoint;
mod model;
mod tensor;
mod train;

pub use checkpoint::{load_model, read_model, save_model, write_model, FLOAT_MAGIC, FORMAT_VERSION};
pub use model::{
    bce_loss, conv2d_backward, conv2d_forward, sigmoid, Architecture, Conv2d, ConvPath, ConvSpec, Dense, ForwardCache,
    KwsModel, CONV_SPECS, KERNEL, PATH_LATENT_LEN,
};
pub use tensor::{Real, Tensor};
pub use train::{train, Optimizer, TrainConfig, TrainReport, DEFAULT_LEARNING_RATE};

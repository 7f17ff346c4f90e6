//! Caption encoder (shared embeddings + GRU) and image encoder (learned
//! projection), both ending in ℓ2 normalization.

mod checkpoint;
mod encoders;
mod gru;
mod params;

pub use checkpoint::{
    load_checkpoint, read_manifest, save_checkpoint, CheckpointInfo, CheckpointPaths,
};
pub use encoders::{
    encode_captions, encode_images, image_backward, image_forward, text_backward, text_forward,
    ImageForward, TextForward,
};
pub use gru::{gru_cell, gru_step_backward, gru_step_forward, StepCache};
pub use params::{
    init_params, GruParams, ImageEncoderParams, ModelConfig, ModelParams, TextEncoderParams,
    INIT_RANGE,
};

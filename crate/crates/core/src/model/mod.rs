//! Decoder-only transformer with pluggable positional schemes.

pub mod checkpoint;
pub mod infer;
pub mod positional;
pub mod transformer;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use infer::Session;
pub use positional::{linear_bias_slopes, rotary_apply, PosScheme};
pub use transformer::{
    forward_logits, greedy_next, init_model, LossOutput, LossPath, ModelConfig, TapeForward,
    Transformer, TransformerWeights,
};

//! Minimal neural-network engine: dense, 1-D and 2-D convolution, pooling and
//! relu layers with backpropagation and Adam.

mod adam;
mod encoder;
mod gradcheck;
mod kernels;
mod real;
mod spec;
mod weights;

use thiserror::Error;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use encoder::{init_encoder, Encoder, ForwardCache};
pub use gradcheck::{grad_check, grad_check_report, gradcheck_suite, relative_error, GradCheckReport};
pub use real::Real;
pub use spec::{Activation, EncoderSpec, Layer};
pub use weights::{EncoderWeights, LayerParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NnError {
    #[error("layer {layer}: {message}")]
    Shape { layer: usize, message: String },
    #[error("invalid encoder spec: {0}")]
    InvalidSpec(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("activation record mismatch: {0}")]
    Cache(String),
    #[error("parameter count mismatch: expected {expected}, got {got}")]
    ParamCount { expected: usize, got: usize },
    #[error("non-finite values in {0}")]
    NonFinite(String),
}

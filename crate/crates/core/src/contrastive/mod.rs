//! Contrastive training of projection encoders: two augmented views per
//! sample, NT-Xent loss on `1 / (1 + distance)` similarity computed directly on
//! the encoder output, and ensembles of independently seeded members.

mod augment;
mod loss;
mod normalize;
mod train;

use thiserror::Error;

pub use augment::{augment, AugmentationPolicy};
pub use loss::{euclid_similarity, ntxent_euclidean, ntxent_euclidean_with_grad};
pub use normalize::{normalize_fit, Normalization, TrainingSet, STD_FLOOR};
pub use train::{train_ensemble, train_member, EnsembleModel, TrainConfig, TrainedMember};

use crate::nn::{EncoderSpec, NnError};
use crate::simulators::ShapeTag;

#[derive(Debug, Error)]
pub enum ContrastiveError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid dataset: {0}")]
    Dataset(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("augmentation family {policy:?} does not match output shape {output:?}")]
    Family { policy: ShapeTag, output: ShapeTag },
    #[error("training diverged at epoch {epoch}, step {step} (loss {loss})")]
    Divergence { epoch: usize, step: usize, loss: f64 },
    #[error("ensemble member {index}: {source}")]
    Member { index: usize, source: Box<ContrastiveError> },
    #[error(transparent)]
    Nn(#[from] NnError),
}

/// Default encoder for an output layout.
pub fn default_encoder(tag: ShapeTag, dims: &[usize], output_dim: usize) -> EncoderSpec {
    match tag {
        ShapeTag::Vector => EncoderSpec::default_vector(dims[0], output_dim),
        ShapeTag::Timeseries => EncoderSpec::default_timeseries(dims[0], dims[1], output_dim),
        ShapeTag::Grid => EncoderSpec::default_grid(dims[0], dims[1], dims[2], output_dim),
    }
}

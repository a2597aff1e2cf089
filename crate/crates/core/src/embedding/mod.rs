//! Projection of outputs through a trained ensemble, distances between the
//! projected points, nearest-neighbour structure and the consensus score.

mod consensus;
mod distance;
mod project;

use thiserror::Error;

pub use consensus::{
    consensus_ensemble, consensus_from_neighbors, consensus_pair, knn, knn_lists, random_baseline, reference_overlap,
    ConsensusReport,
};
pub use distance::{
    distance, distance_between, mean_distance_matrix, replicate_distance, replicate_distance_between,
    DistanceSummary,
};
pub use project::{project, project_dataset, MemberProjections};

use crate::contrastive::ContrastiveError;
use crate::nn::NnError;

/// A projected point.
#[derive(Clone, Debug, PartialEq)]
pub struct Embedding(pub Vec<f64>);

impl Embedding {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dist(&self, other: &Embedding) -> f64 {
        euclid(&self.0, &other.0)
    }
}

pub(crate) fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("empty set of outputs")]
    EmptySet,
    #[error("neighbourhood size {n} needs 1 <= n < {points}")]
    Neighborhood { n: usize, points: usize },
    #[error("projections hold {a} and {b} points")]
    Length { a: usize, b: usize },
    #[error("consensus needs at least two members, got {0}")]
    Members(usize),
    #[error(transparent)]
    Contrastive(#[from] ContrastiveError),
    #[error(transparent)]
    Nn(#[from] NnError),
}

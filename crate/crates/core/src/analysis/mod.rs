//! Analyses built on ensemble distances: parameter and flux-bound sweeps,
//! knockouts grouped by subsystem, one-at-a-time sensitivity, and
//! hierarchical clustering with per-cluster summaries.

mod characterize;
mod cluster;
mod knockout;
mod sensitivity;
pub mod stats;
mod sweep;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use characterize::{characterize_clusters, ClusterProfile, Distribution, Separation};
pub use cluster::{agglomerative_cluster, ClusterResult, Linkage, Merge};
pub use knockout::{knockout_sweep, KnockoutEntry, KnockoutResult, SubsystemSummary};
pub use sensitivity::{local_sensitivity, normalize_column, rank_order, SensitivityResult};
pub use sweep::{
    flux_bound_sweep, log_bound_grid, parameter_sweep, sweep_values, FluxSweepResult, SweepPoint, SweepResult,
};

use crate::embedding::EmbeddingError;
use crate::simulators::{FbaError, SimError, SimulationOutput};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("invalid request: {0}")]
    Invalid(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Fba(#[from] FbaError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
}

/// Scalar outputs read from a simulation for comparison or description.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputSummary {
    /// Last timepoint of every species.
    FinalValues,
    /// Occupied sites per grid channel.
    ChannelTotals,
    /// Every value.
    All,
}

impl OutputSummary {
    pub fn extract(self, out: &SimulationOutput) -> Vec<f64> {
        match self {
            OutputSummary::FinalValues => out.final_row().map(<[f64]>::to_vec).unwrap_or_else(|| out.data.clone()),
            OutputSummary::ChannelTotals => out.channel_totals().unwrap_or_else(|| out.data.clone()),
            OutputSummary::All => out.data.clone(),
        }
    }
}

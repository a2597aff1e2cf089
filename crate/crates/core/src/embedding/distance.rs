use serde::Serialize;

use super::{project, Embedding, EmbeddingError};
use crate::contrastive::EnsembleModel;
use crate::simulators::SimulationOutput;

/// Per-member distances and their mean and population standard deviation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistanceSummary {
    pub mean: f64,
    pub std: f64,
    pub per_member: Vec<f64>,
    /// Cross pairs averaged into each member's value.
    pub pairs: usize,
}

impl DistanceSummary {
    pub fn from_members(per_member: Vec<f64>, pairs: usize) -> Self {
        let m = per_member.len() as f64;
        let mean = per_member.iter().sum::<f64>() / m;
        let var = per_member.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / m;
        Self { mean, std: var.sqrt(), per_member, pairs }
    }
}

/// Summary from two sets of per-member embeddings of single outputs.
pub fn distance_between(a: &[Embedding], b: &[Embedding]) -> Result<DistanceSummary, EmbeddingError> {
    if a.len() != b.len() || a.is_empty() {
        return Err(EmbeddingError::Length { a: a.len(), b: b.len() });
    }
    Ok(DistanceSummary::from_members(a.iter().zip(b).map(|(x, y)| x.dist(y)).collect(), 1))
}

pub fn distance(model: &EnsembleModel, a: &SimulationOutput, b: &SimulationOutput) -> Result<DistanceSummary, EmbeddingError> {
    distance_between(&project(model, a)?, &project(model, b)?)
}

/// `set_a[i][k]` is member `k`'s embedding of output `i`. Per member, the mean
/// distance over all cross pairs.
pub fn replicate_distance_between(
    set_a: &[Vec<Embedding>],
    set_b: &[Vec<Embedding>],
) -> Result<DistanceSummary, EmbeddingError> {
    if set_a.is_empty() || set_b.is_empty() {
        return Err(EmbeddingError::EmptySet);
    }
    let members = set_a[0].len();
    if set_a.iter().chain(set_b).any(|p| p.len() != members) {
        return Err(EmbeddingError::Shape("replicates projected by different ensembles".into()));
    }
    let pairs = set_a.len() * set_b.len();
    let per_member = (0..members)
        .map(|k| {
            let mut total = 0.0;
            for a in set_a {
                for b in set_b {
                    total += a[k].dist(&b[k]);
                }
            }
            total / pairs as f64
        })
        .collect();
    Ok(DistanceSummary::from_members(per_member, pairs))
}

pub fn replicate_distance(
    model: &EnsembleModel,
    set_a: &[SimulationOutput],
    set_b: &[SimulationOutput],
) -> Result<DistanceSummary, EmbeddingError> {
    if set_a.is_empty() || set_b.is_empty() {
        return Err(EmbeddingError::EmptySet);
    }
    let pa: Vec<_> = set_a.iter().map(|o| project(model, o)).collect::<Result<_, _>>()?;
    let pb: Vec<_> = set_b.iter().map(|o| project(model, o)).collect::<Result<_, _>>()?;
    replicate_distance_between(&pa, &pb)
}

/// Row-major `N x N` matrix of member-averaged distances.
pub fn mean_distance_matrix(projections: &[Vec<Embedding>]) -> Result<Vec<f64>, EmbeddingError> {
    let Some(first) = projections.first() else { return Err(EmbeddingError::Members(0)) };
    let n = first.len();
    if let Some(p) = projections.iter().find(|p| p.len() != n) {
        return Err(EmbeddingError::Length { a: n, b: p.len() });
    }
    let m = projections.len() as f64;
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let v = projections.iter().map(|p| p[i].dist(&p[j])).sum::<f64>() / m;
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    Ok(d)
}

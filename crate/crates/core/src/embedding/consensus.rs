use rayon::prelude::*;
use serde::Serialize;

use super::{project_dataset, Embedding, EmbeddingError};
use crate::contrastive::EnsembleModel;
use crate::simulators::SimulationOutput;

/// Expected per-point overlap of two independent random neighbourhoods.
pub fn random_baseline(n: usize, points: usize) -> f64 {
    n as f64 / (points as f64 - 1.0)
}

/// The `n` nearest other points of every point, closest first. Equal
/// distances are ordered by index.
pub fn knn(points: &[Embedding], n: usize) -> Result<Vec<Vec<usize>>, EmbeddingError> {
    let rows: Vec<&[f64]> = points.iter().map(|p| p.coords()).collect();
    knn_lists(&rows, n)
}

/// [`knn`] over raw coordinate rows.
pub fn knn_lists(points: &[&[f64]], n: usize) -> Result<Vec<Vec<usize>>, EmbeddingError> {
    let count = points.len();
    if n == 0 || n >= count {
        return Err(EmbeddingError::Neighborhood { n, points: count });
    }
    Ok((0..count)
        .into_par_iter()
        .map(|i| {
            let mut cand: Vec<(f64, usize)> = (0..count)
                .filter(|&j| j != i)
                .map(|j| (super::euclid(points[i], points[j]), j))
                .collect();
            let by = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
            cand.select_nth_unstable_by(n - 1, by);
            cand.truncate(n);
            cand.sort_unstable_by(by);
            cand.into_iter().map(|(_, j)| j).collect()
        })
        .collect())
}

/// Mean over points of `|A_i ∩ B_i| / n`, using the first `n` entries of
/// each neighbour list.
pub fn consensus_from_neighbors(a: &[Vec<usize>], b: &[Vec<usize>], n: usize) -> Result<f64, EmbeddingError> {
    if a.len() != b.len() || a.is_empty() {
        return Err(EmbeddingError::Length { a: a.len(), b: b.len() });
    }
    if n == 0 || a.iter().chain(b).any(|l| l.len() < n) {
        return Err(EmbeddingError::Neighborhood { n, points: a.len() });
    }
    let total: usize = a
        .iter()
        .zip(b)
        .map(|(la, lb)| la[..n].iter().filter(|j| lb[..n].contains(j)).count())
        .sum();
    Ok(total as f64 / (n * a.len()) as f64)
}

pub fn consensus_pair(a: &[Embedding], b: &[Embedding], n: usize) -> Result<f64, EmbeddingError> {
    if a.len() != b.len() {
        return Err(EmbeddingError::Length { a: a.len(), b: b.len() });
    }
    consensus_from_neighbors(&knn(a, n)?, &knn(b, n)?, n)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConsensusReport {
    pub n: usize,
    /// Symmetric `M x M` matrix with unit diagonal.
    pub pairwise: Vec<Vec<f64>>,
    /// Mean of the upper triangle.
    pub ensemble_score: f64,
    pub baseline: f64,
}

impl ConsensusReport {
    /// Reports for every `n` from per-member neighbour lists computed at
    /// `max(ns)`.
    pub fn from_neighbor_lists(lists: &[Vec<Vec<usize>>], ns: &[usize]) -> Result<Vec<Self>, EmbeddingError> {
        let m = lists.len();
        if m < 2 {
            return Err(EmbeddingError::Members(m));
        }
        let points = lists[0].len();
        ns.iter()
            .map(|&n| {
                let mut pairwise = vec![vec![1.0; m]; m];
                let mut total = 0.0;
                for i in 0..m {
                    for j in i + 1..m {
                        let s = consensus_from_neighbors(&lists[i], &lists[j], n)?;
                        pairwise[i][j] = s;
                        pairwise[j][i] = s;
                        total += s;
                    }
                }
                let ensemble_score = total / (m * (m - 1) / 2) as f64;
                Ok(Self { n, pairwise, ensemble_score, baseline: random_baseline(n, points) })
            })
            .collect()
    }

    pub fn from_projections(projections: &[Vec<Embedding>], ns: &[usize]) -> Result<Vec<Self>, EmbeddingError> {
        let n_max = ns.iter().copied().max().ok_or(EmbeddingError::Neighborhood { n: 0, points: 0 })?;
        if projections.len() < 2 {
            return Err(EmbeddingError::Members(projections.len()));
        }
        let lists: Vec<Vec<Vec<usize>>> = projections.iter().map(|p| knn(p, n_max)).collect::<Result<_, _>>()?;
        Self::from_neighbor_lists(&lists, ns)
    }
}

/// Per-member overlap of `n`-neighbourhoods in projected space with those of
/// known reference coordinates (for data whose true layout is known).
pub fn reference_overlap(
    projections: &[Vec<Embedding>],
    reference: &[&[f64]],
    n: usize,
) -> Result<Vec<f64>, EmbeddingError> {
    let truth = knn_lists(reference, n)?;
    projections
        .iter()
        .map(|p| {
            if p.len() != reference.len() {
                return Err(EmbeddingError::Length { a: p.len(), b: reference.len() });
            }
            consensus_from_neighbors(&knn(p, n)?, &truth, n)
        })
        .collect()
}

/// Projects `dataset` with every member and scores every member pair.
pub fn consensus_ensemble(
    model: &EnsembleModel,
    dataset: &[SimulationOutput],
    ns: &[usize],
) -> Result<Vec<ConsensusReport>, EmbeddingError> {
    if model.len() < 2 {
        return Err(EmbeddingError::Members(model.len()));
    }
    ConsensusReport::from_projections(&project_dataset(model, dataset)?, ns)
}

use rayon::prelude::*;
use serde::Serialize;

use super::stats::spearman;
use super::AnalysisError;
use crate::contrastive::EnsembleModel;
use crate::embedding::{distance_between, project, replicate_distance_between, DistanceSummary, Embedding};
use crate::rng::derive_seed;
use crate::simulators::{fba_solve, FluxNetwork, ModelFamily, SimulationOutput};

const BASE_STREAM: u64 = 0x6261_7365;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub value: f64,
    pub summary: Option<DistanceSummary>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepResult {
    pub param_index: usize,
    pub param_name: String,
    pub base_value: f64,
    /// Replicates per point for stochastic families, 1 otherwise.
    pub replicates: usize,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn means(&self) -> Vec<Option<f64>> {
        self.points.iter().map(|p| p.summary.as_ref().map(|s| s.mean)).collect()
    }

    pub fn base_point(&self) -> Option<&SweepPoint> {
        self.points.iter().find(|p| p.value == self.base_value)
    }

    /// Spearman correlation of `|value - base|` with the mean distance over
    /// the points that succeeded.
    pub fn offset_correlation(&self) -> f64 {
        let (x, y): (Vec<f64>, Vec<f64>) = self
            .points
            .iter()
            .filter_map(|p| p.summary.as_ref().map(|s| ((p.value - self.base_value).abs(), s.mean)))
            .unzip();
        spearman(&x, &y)
    }
}

/// `count` values spaced geometrically from `base / factor` to
/// `base * factor`; the middle one is exactly `base`.
pub fn sweep_values(base: f64, count: usize, factor: f64) -> Vec<f64> {
    assert!(count >= 3 && count % 2 == 1, "sweep needs an odd count >= 3");
    let half = (count / 2) as f64;
    (0..count)
        .map(|k| if k == count / 2 { base } else { base * factor.powf((k as f64 - half) / half) })
        .collect()
}

/// `0` followed by `count - 1` log-spaced negative bounds ending at
/// `-largest`, three decades below it at the start.
pub fn log_bound_grid(count: usize, largest: f64) -> Vec<f64> {
    assert!(count >= 2, "grid needs at least two values");
    let last = (count - 1) as f64;
    std::iter::once(0.0)
        .chain((1..count).map(|k| -largest * 10f64.powf(-3.0 * (1.0 - k as f64 / last))))
        .collect()
}

fn replicate_seeds(seed: u64, stream: u64, replicates: usize) -> Vec<u64> {
    let s = derive_seed(seed, stream);
    (0..replicates as u64).map(|r| derive_seed(s, r)).collect()
}

fn project_runs(
    family: &ModelFamily,
    model: &EnsembleModel,
    params: &[f64],
    seeds: &[u64],
) -> Result<Vec<Vec<Embedding>>, AnalysisError> {
    seeds
        .iter()
        .map(|&s| {
            let out = family.simulate(params, s)?;
            Ok(project(model, &out)?)
        })
        .collect()
}

/// Distance from the base output to outputs with parameter `index` set to
/// each of `values`. Stochastic families compare replicate sets, with seeds
/// tied to the value so that reordering `values` changes nothing.
pub fn parameter_sweep(
    family: &ModelFamily,
    model: &EnsembleModel,
    base_params: &[f64],
    index: usize,
    values: &[f64],
    replicates: usize,
    seed: u64,
) -> Result<SweepResult, AnalysisError> {
    let names = family.param_names();
    if base_params.len() != names.len() {
        return Err(AnalysisError::Invalid(format!("{} base parameters for {} names", base_params.len(), names.len())));
    }
    let Some(base_value) = base_params.get(index).copied() else {
        return Err(AnalysisError::Invalid(format!("parameter index {index} out of range")));
    };
    if !values.contains(&base_value) {
        return Err(AnalysisError::Invalid(format!("swept values must include the base value {base_value}")));
    }
    let reps = if family.is_stochastic() {
        if replicates < 2 {
            return Err(AnalysisError::Invalid("stochastic sweeps need at least 2 replicates".into()));
        }
        replicates
    } else {
        1
    };
    let base_seeds = if reps > 1 { replicate_seeds(seed, BASE_STREAM, reps) } else { vec![seed] };
    let base = project_runs(family, model, base_params, &base_seeds)?;
    let points = values
        .par_iter()
        .map(|&value| {
            let mut params = base_params.to_vec();
            params[index] = value;
            let seeds = if reps > 1 { replicate_seeds(seed, value.to_bits(), reps) } else { vec![seed] };
            let result = project_runs(family, model, &params, &seeds).and_then(|runs| {
                if reps > 1 {
                    Ok(replicate_distance_between(&base, &runs)?)
                } else {
                    Ok(distance_between(&base[0], &runs[0])?)
                }
            });
            match result {
                Ok(summary) => SweepPoint { value, summary: Some(summary), error: None },
                Err(e) => SweepPoint { value, summary: None, error: Some(e.to_string()) },
            }
        })
        .collect();
    Ok(SweepResult { param_index: index, param_name: names[index].clone(), base_value, replicates: reps, points })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FluxSweepResult {
    pub sweep: SweepResult,
    /// Optimal flux vector at every point, `None` where the program failed.
    pub fluxes: Vec<Option<Vec<f64>>>,
    /// Length of the final run of identical flux vectors.
    pub plateau: usize,
}

impl FluxSweepResult {
    /// Mean distance never decreases up to the start of the plateau, and the
    /// plateau holds at least `min_plateau` points.
    pub fn rises_then_plateaus(&self, min_plateau: usize) -> bool {
        if self.plateau < min_plateau {
            return false;
        }
        let means = self.sweep.means();
        let start = means.len() - self.plateau;
        let head: Option<Vec<f64>> = means[..=start].iter().copied().collect();
        head.is_some_and(|h| h.windows(2).all(|w| w[1] >= w[0]))
    }
}

fn trailing_plateau(fluxes: &[Option<Vec<f64>>]) -> usize {
    let Some(Some(last)) = fluxes.last() else { return 0 };
    fluxes.iter().rev().take_while(|f| f.as_ref() == Some(last)).count()
}

/// Distance from the flux state with the lower bound of `reaction` at 0 to
/// the states at each bound in `values`.
pub fn flux_bound_sweep(
    net: &FluxNetwork,
    model: &EnsembleModel,
    reaction: usize,
    values: &[f64],
) -> Result<FluxSweepResult, AnalysisError> {
    let Some(r) = net.reactions.get(reaction) else {
        return Err(AnalysisError::Invalid(format!("reaction index {reaction} out of range")));
    };
    let upper = r.upper_bound;
    let solve_at = |bound: f64| -> Result<SimulationOutput, AnalysisError> {
        let mut copy = net.clone();
        copy.set_bounds(reaction, bound, upper)?;
        Ok(fba_solve(&copy)?.to_output(vec![bound], 0))
    };
    let base = project(model, &solve_at(0.0)?)?;
    let results: Vec<(SweepPoint, Option<Vec<f64>>)> = values
        .par_iter()
        .map(|&value| {
            let outcome = solve_at(value).and_then(|out| {
                let d = distance_between(&base, &project(model, &out)?)?;
                Ok((d, out.data))
            });
            match outcome {
                Ok((d, flux)) => (SweepPoint { value, summary: Some(d), error: None }, Some(flux)),
                Err(e) => (SweepPoint { value, summary: None, error: Some(e.to_string()) }, None),
            }
        })
        .collect();
    let (points, fluxes): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let plateau = trailing_plateau(&fluxes);
    let sweep = SweepResult {
        param_index: reaction,
        param_name: format!("lb:{}", r.id),
        base_value: 0.0,
        replicates: 1,
        points,
    };
    Ok(FluxSweepResult { sweep, fluxes, plateau })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        let v = sweep_values(3.0, 21, 2.0);
        assert_eq!(v.len(), 21);
        assert_eq!(v[10], 3.0);
        assert!((v[0] - 1.5).abs() < 1e-12 && (v[20] - 6.0).abs() < 1e-12);
        assert!(v.windows(2).all(|w| w[1] > w[0]));
        let g = log_bound_grid(21, 1000.0);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[20], -1000.0);
        assert!((g[1] + 1000.0 * 10f64.powf(-2.85)).abs() < 1e-9);
        assert!(g.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn plateau_length() {
        let a = Some(vec![1.0]);
        let b = Some(vec![2.0]);
        assert_eq!(trailing_plateau(&[a.clone(), b.clone(), b.clone(), b.clone()]), 3);
        assert_eq!(trailing_plateau(&[b.clone(), a.clone()]), 1);
        assert_eq!(trailing_plateau(&[a, None]), 0);
        assert_eq!(trailing_plateau(&[]), 0);
    }
}

use rayon::prelude::*;
use serde::Serialize;

use super::{AnalysisError, OutputSummary};
use crate::contrastive::EnsembleModel;
use crate::embedding::{distance_between, project};
use crate::simulators::ModelFamily;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SensitivityResult {
    pub names: Vec<String>,
    pub delta: f64,
    /// Mean ensemble distance to the base output; `None` where the perturbed
    /// run failed.
    pub projected: Vec<Option<f64>>,
    pub projected_std: Vec<Option<f64>>,
    /// Mean absolute (or relative) change of the selected scalar outputs.
    pub specified: Vec<Option<f64>>,
    pub projected_normalized: Vec<Option<f64>>,
    pub specified_normalized: Vec<Option<f64>>,
    /// 1 = most sensitive.
    pub projected_rank: Vec<Option<usize>>,
    pub specified_rank: Vec<Option<usize>>,
    /// The column's maximum was 0, so it was left at 0.
    pub projected_degenerate: bool,
    pub specified_degenerate: bool,
    pub errors: Vec<Option<String>>,
}

/// Divides by the column maximum. An all-zero column stays zero and is
/// flagged.
pub fn normalize_column(raw: &[Option<f64>]) -> (Vec<Option<f64>>, bool) {
    let max = raw.iter().flatten().fold(0.0f64, |m, &v| m.max(v));
    if max > 0.0 {
        (raw.iter().map(|v| v.map(|x| x / max)).collect(), false)
    } else {
        (raw.iter().map(|v| v.map(|_| 0.0)).collect(), true)
    }
}

/// Rank of every value, largest first, ties by index.
pub fn rank_order(raw: &[Option<f64>]) -> Vec<Option<usize>> {
    let mut idx: Vec<usize> = (0..raw.len()).filter(|&i| raw[i].is_some()).collect();
    idx.sort_by(|&a, &b| raw[b].unwrap().total_cmp(&raw[a].unwrap()).then(a.cmp(&b)));
    let mut ranks = vec![None; raw.len()];
    for (r, &i) in idx.iter().enumerate() {
        ranks[i] = Some(r + 1);
    }
    ranks
}

/// Raises each parameter by `delta` (relative) in turn and compares the
/// result with the base run, both in projected space and through
/// `specified`. Stochastic families reuse `seed` for every run.
pub fn local_sensitivity(
    family: &ModelFamily,
    model: &EnsembleModel,
    base_params: &[f64],
    delta: f64,
    specified: OutputSummary,
    relative: bool,
    seed: u64,
) -> Result<SensitivityResult, AnalysisError> {
    let names = family.param_names();
    if base_params.len() != names.len() {
        return Err(AnalysisError::Invalid(format!("{} base parameters for {} names", base_params.len(), names.len())));
    }
    if !delta.is_finite() {
        return Err(AnalysisError::Invalid(format!("delta {delta} is not finite")));
    }
    let base_out = family.simulate(base_params, seed)?;
    let base_proj = project(model, &base_out)?;
    let base_values = specified.extract(&base_out);
    let rows: Vec<Result<(f64, f64, f64), String>> = (0..names.len())
        .into_par_iter()
        .map(|i| {
            let mut params = base_params.to_vec();
            params[i] *= 1.0 + delta;
            let run = || -> Result<(f64, f64, f64), AnalysisError> {
                let out = family.simulate(&params, seed)?;
                let d = distance_between(&base_proj, &project(model, &out)?)?;
                let values = specified.extract(&out);
                let change = values
                    .iter()
                    .zip(&base_values)
                    .map(|(v, b)| {
                        let c = (v - b).abs();
                        if relative && *b != 0.0 { c / b.abs() } else { c }
                    })
                    .sum::<f64>()
                    / values.len() as f64;
                Ok((d.mean, d.std, change))
            };
            run().map_err(|e| e.to_string())
        })
        .collect();
    let projected: Vec<Option<f64>> = rows.iter().map(|r| r.as_ref().ok().map(|t| t.0)).collect();
    let projected_std = rows.iter().map(|r| r.as_ref().ok().map(|t| t.1)).collect();
    let spec_raw: Vec<Option<f64>> = rows.iter().map(|r| r.as_ref().ok().map(|t| t.2)).collect();
    let errors = rows.iter().map(|r| r.as_ref().err().cloned()).collect();
    let (projected_normalized, projected_degenerate) = normalize_column(&projected);
    let (specified_normalized, specified_degenerate) = normalize_column(&spec_raw);
    Ok(SensitivityResult {
        names,
        delta,
        projected_rank: rank_order(&projected),
        specified_rank: rank_order(&spec_raw),
        projected,
        projected_std,
        specified: spec_raw,
        projected_normalized,
        specified_normalized,
        projected_degenerate,
        specified_degenerate,
        errors,
    })
}

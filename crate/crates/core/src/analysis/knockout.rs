use rayon::prelude::*;
use serde::Serialize;

use super::stats::{mean, std_pop};
use super::AnalysisError;
use crate::contrastive::EnsembleModel;
use crate::embedding::{distance_between, project, DistanceSummary};
use crate::simulators::{fba_knockout, fba_solve, FluxNetwork};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KnockoutEntry {
    pub reaction: String,
    pub subsystem: String,
    /// Flux of this reaction in the unperturbed optimum.
    pub base_flux: f64,
    pub distance: Option<DistanceSummary>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubsystemSummary {
    pub subsystem: String,
    /// Mean and population std of the per-reaction mean distances; `None`
    /// when every knockout in the subsystem failed.
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub included: usize,
    pub excluded: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KnockoutResult {
    pub reactions: Vec<KnockoutEntry>,
    pub subsystems: Vec<SubsystemSummary>,
}

impl KnockoutResult {
    /// Subsystem with the largest mean distance.
    pub fn top_subsystem(&self) -> Option<&str> {
        self.subsystems
            .iter()
            .filter_map(|s| s.mean.map(|m| (m, s.subsystem.as_str())))
            .fold(None, |best: Option<(f64, &str)>, cur| match best {
                Some(b) if b.0 >= cur.0 => Some(b),
                _ => Some(cur),
            })
            .map(|(_, name)| name)
    }

    /// Subsystem summaries rebuilt from the per-reaction entries.
    pub fn summarize(reactions: &[KnockoutEntry]) -> Vec<SubsystemSummary> {
        let mut names: Vec<&str> = Vec::new();
        for r in reactions {
            if !names.contains(&r.subsystem.as_str()) {
                names.push(&r.subsystem);
            }
        }
        names
            .into_iter()
            .map(|name| {
                let group: Vec<&KnockoutEntry> = reactions.iter().filter(|r| r.subsystem == name).collect();
                let values: Vec<f64> = group.iter().filter_map(|r| r.distance.as_ref().map(|d| d.mean)).collect();
                let (m, s) = if values.is_empty() { (None, None) } else { (Some(mean(&values)), Some(std_pop(&values))) };
                SubsystemSummary {
                    subsystem: name.to_string(),
                    mean: m,
                    std: s,
                    included: values.len(),
                    excluded: group.len() - values.len(),
                }
            })
            .collect()
    }
}

/// Knocks out every reaction in turn and groups the distances to the
/// unperturbed flux state by subsystem. Failed knockouts are excluded.
pub fn knockout_sweep(net: &FluxNetwork, model: &EnsembleModel) -> Result<KnockoutResult, AnalysisError> {
    let base_solution = fba_solve(net)?;
    let base = project(model, &base_solution.to_output(Vec::new(), 0))?;
    let reactions: Vec<KnockoutEntry> = (0..net.len())
        .into_par_iter()
        .map(|i| {
            let outcome = fba_knockout(net, i)
                .map_err(AnalysisError::from)
                .and_then(|s| Ok(distance_between(&base, &project(model, &s.to_output(Vec::new(), 0))?)?));
            let r = &net.reactions[i];
            let (distance, error) = match outcome {
                Ok(d) => (Some(d), None),
                Err(e) => (None, Some(e.to_string())),
            };
            KnockoutEntry {
                reaction: r.id.clone(),
                subsystem: r.subsystem.clone(),
                base_flux: base_solution.fluxes[i],
                distance,
                error,
            }
        })
        .collect();
    let subsystems = KnockoutResult::summarize(&reactions);
    Ok(KnockoutResult { reactions, subsystems })
}

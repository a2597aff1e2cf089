mod common;

use rand::Rng;
use simrep::analysis::*;
use simrep::contrastive::EnsembleModel;
use simrep::nn::EncoderSpec;
use simrep::rng::rng_from_seed;
use simrep::simulators::*;

fn flux_model(net: &FluxNetwork) -> EnsembleModel {
    common::untrained_ensemble(&EncoderSpec::default_vector(net.len(), 4), &[3, 4, 5])
}

fn pairwise(points: &[Vec<f64>]) -> Vec<f64> {
    let n = points.len();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            d[i * n + j] = points[i].iter().zip(&points[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        }
    }
    d
}

#[test]
fn average_linkage_matches_the_brute_force_oracle() {
    for seed in 0..20u64 {
        let mut rng = rng_from_seed(seed);
        let n = 8 + (seed as usize * 7) % 57;
        let points: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let centre = if i % 2 == 0 { 0.0 } else { 4.0 };
                vec![centre + rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()]
            })
            .collect();
        let d = pairwise(&points);
        for k in [1, 2, 3] {
            let got = agglomerative_cluster(&d, n, k, Linkage::Average).unwrap();
            let (labels, heights) = common::brute_average_linkage(&d, n, k);
            assert_eq!(got.labels, labels, "seed {seed} k {k}");
            for (m, h) in got.merges.iter().zip(&heights) {
                assert!((m.height - h).abs() < 1e-9, "seed {seed}: {} vs {h}", m.height);
            }
            assert_eq!(got.cut(k), labels);
        }
        let two = agglomerative_cluster(&d, n, 2, Linkage::Average).unwrap();
        let expected: Vec<usize> = (0..n).map(|i| i % 2).collect();
        assert_eq!(two.labels, expected);
    }
}

#[test]
fn merge_heights_never_decrease_for_average_linkage() {
    let mut rng = rng_from_seed(9);
    let points: Vec<Vec<f64>> = (0..40).map(|_| vec![rng.random::<f64>(), rng.random::<f64>()]).collect();
    let r = agglomerative_cluster(&pairwise(&points), 40, 1, Linkage::Average).unwrap();
    assert_eq!(r.merges.len(), 39);
    assert!(r.merges.windows(2).all(|w| w[1].height >= w[0].height - 1e-12));
    assert_eq!(r.merges.last().unwrap().size, 40);
}

#[test]
fn separation_is_reported_in_pooled_standard_deviations() {
    let labels = vec![0, 0, 0, 1, 1, 1];
    let columns = vec![vec![1.0, 2.0, 3.0, 5.0, 6.0, 7.0], vec![1.0; 6]];
    let names = vec!["x".to_string(), "flat".to_string()];
    let (profiles, sep) = characterize_clusters(&labels, 2, &names, &columns, 4).unwrap();
    assert_eq!(profiles[0].size, 3);
    assert!((sep[0].pooled_std_units - 4.0).abs() < 1e-12);
    assert_eq!(sep[1].pooled_std_units, 0.0);
    let bins: usize = profiles.iter().map(|p| p.columns[0].as_ref().unwrap().bins.iter().sum::<usize>()).sum();
    assert_eq!(bins, 6);
}

/// Upper-bound parameter on a reaction whose base flux sits well inside it.
fn slack_upper_bound(net: &FluxNetwork) -> String {
    let base = fba_solve(net).unwrap();
    let i = net
        .reactions
        .iter()
        .zip(&base.fluxes)
        .position(|(r, v)| r.upper_bound > 0.0 && r.upper_bound.is_finite() && *v < 0.5 * r.upper_bound)
        .unwrap();
    format!("ub:{}", net.reactions[i].id)
}

#[test]
fn sensitivity_gives_zero_to_parameters_without_effect() {
    let net = FluxNetwork::toy();
    let slack = slack_upper_bound(&net);
    let params = vec!["lb:EX_glc".to_string(), slack.clone(), "lb:ATPM".to_string()];
    let family = ModelFamily::Fba { network: net.clone(), params };
    let model = flux_model(&net);
    let base = family.base_params().unwrap();
    let r = local_sensitivity(&family, &model, &base, 0.1, OutputSummary::All, false, 0).unwrap();
    assert_eq!(r.projected[1], Some(0.0), "{slack}");
    assert_eq!(r.specified[1], Some(0.0), "{slack}");
    assert_eq!(r.projected_normalized[1], Some(0.0));
    assert_eq!(r.specified_normalized[1], Some(0.0));
    for col in [&r.projected_normalized, &r.specified_normalized] {
        assert_eq!(col.iter().filter(|v| **v == Some(1.0)).count(), 1);
    }
    assert!(!r.projected_degenerate && !r.specified_degenerate);
}

#[test]
fn zero_delta_is_flagged_as_degenerate() {
    let net = FluxNetwork::toy();
    let family = ModelFamily::toy_fba();
    let base = family.base_params().unwrap();
    let r = local_sensitivity(&family, &flux_model(&net), &base, 0.0, OutputSummary::All, true, 0).unwrap();
    assert!(r.projected_degenerate && r.specified_degenerate);
    assert!(r.projected_normalized.iter().all(|v| *v == Some(0.0)));
    assert!(local_sensitivity(&family, &flux_model(&net), &base, f64::NAN, OutputSummary::All, true, 0).is_err());
}

#[test]
fn deterministic_sweeps_are_zero_at_the_base_value() {
    let family = ModelFamily::toy_fba();
    let net = FluxNetwork::toy();
    let model = flux_model(&net);
    let base = family.base_params().unwrap();
    let values = sweep_values(base[0], 7, 2.0);
    assert_eq!(values[3], base[0]);
    let r = parameter_sweep(&family, &model, &base, 0, &values, 1, 5).unwrap();
    assert_eq!(r.base_point().unwrap().summary.as_ref().unwrap().mean, 0.0);
    assert_eq!(r.points.len(), 7);
    let shuffled: Vec<f64> = values.iter().rev().copied().collect();
    let again = parameter_sweep(&family, &model, &base, 0, &shuffled, 1, 5).unwrap();
    assert_eq!(again.means().into_iter().rev().collect::<Vec<_>>(), r.means());
    assert!(parameter_sweep(&family, &model, &base, 0, &[1.0, 2.0], 1, 5).is_err());
}

#[test]
fn stochastic_sweeps_need_replicates() {
    let family = ModelFamily::Abm { side: 10, steps: 4 };
    let model = common::untrained_ensemble(&EncoderSpec::default_vector(300, 2), &[1, 2]);
    let base = family.base_params().unwrap();
    assert!(parameter_sweep(&family, &model, &base, 0, &[base[0]], 1, 1).is_err());
}

#[test]
fn flux_sweep_starts_from_zero_at_bound_zero() {
    let net = FluxNetwork::toy();
    let model = flux_model(&net);
    let glc = net.reaction_index("EX_glc").unwrap();
    let grid = log_bound_grid(9, 1000.0);
    assert_eq!(grid[0], 0.0);
    assert!(grid.windows(2).all(|w| w[1] < w[0]));
    let r = flux_bound_sweep(&net, &model, glc, &grid).unwrap();
    assert_eq!(r.sweep.points[0].summary.as_ref().unwrap().mean, 0.0);
    assert_eq!(r.fluxes.len(), 9);
}

#[test]
fn knockout_summaries_recompute_from_reactions() {
    let net = FluxNetwork::toy();
    let base = fba_solve(&net).unwrap();
    let r = knockout_sweep(&net, &flux_model(&net)).unwrap();
    assert_eq!(r.reactions.len(), net.len());
    for (entry, v) in r.reactions.iter().zip(&base.fluxes) {
        if *v == 0.0 {
            assert_eq!(entry.distance.as_ref().unwrap().mean, 0.0, "{}", entry.reaction);
        }
    }
    for s in &r.subsystems {
        let values: Vec<f64> = r
            .reactions
            .iter()
            .filter(|e| e.subsystem == s.subsystem)
            .filter_map(|e| e.distance.as_ref().map(|d| d.mean))
            .collect();
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / values.len() as f64;
        assert!((s.mean.unwrap() - mean).abs() <= 1e-12);
        assert!((s.std.unwrap() - var.sqrt()).abs() <= 1e-12);
        assert_eq!(s.included, values.len());
    }
    let failed = r.reactions.iter().filter(|e| e.error.is_some()).count();
    assert_eq!(failed, r.subsystems.iter().map(|s| s.excluded).sum::<usize>());
    assert!(r.top_subsystem().is_some());
}

//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use simrep::contrastive::{EnsembleModel, Normalization};
use simrep::nn::{init_encoder, EncoderSpec};
use rand::Rng;
use simrep::rng::rng_from_seed;
use simrep::simulators::fba::lp::LinearProgram;
use simrep::simulators::{FluxNetwork, Reaction};

/// Neighbours by a full stable sort of every other point.
pub fn brute_knn(points: &[Vec<f64>], n: usize) -> Vec<Vec<usize>> {
    (0..points.len())
        .map(|i| {
            let mut others: Vec<(f64, usize)> = (0..points.len())
                .filter(|&j| j != i)
                .map(|j| {
                    let d: f64 = points[i].iter().zip(&points[j]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                    (d, j)
                })
                .collect();
            others.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            others.into_iter().take(n).map(|(_, j)| j).collect()
        })
        .collect()
}

/// Direct evaluation of the mean NT-Xent loss with `1 / (1 + d)` similarity.
pub fn ntxent_direct(rows: &[Vec<f64>], tau: f64) -> f64 {
    let sim = |a: &Vec<f64>, b: &Vec<f64>| {
        let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
        1.0 / (1.0 + d)
    };
    let n = rows.len();
    let mut total = 0.0;
    for i in 0..n {
        let pair = i ^ 1;
        let num = (sim(&rows[i], &rows[pair]) / tau).exp();
        let den: f64 = (0..n).filter(|&k| k != i).map(|k| (sim(&rows[i], &rows[k]) / tau).exp()).sum();
        total += -(num / den).ln();
    }
    total / n as f64
}

fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().partial_cmp(&a[j][c].abs()).unwrap())?;
        if a[p][c].abs() < 1e-10 {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in 0..n {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..n {
                    a[r][k] -= f * a[c][k];
                }
                b[r] -= f * b[c];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// Best objective over all basic solutions of a box-bounded program with
/// full row rank: every variable is at a bound or basic, exactly `m` basic.
/// `None` when no vertex is feasible.
pub fn vertex_enumeration(lp: &LinearProgram) -> Option<(f64, Vec<f64>)> {
    let m = lp.a.len();
    let n = lp.objective.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let total = 3usize.pow(n as u32);
    for code in 0..total {
        let mut c = code;
        let mut status = Vec::with_capacity(n);
        for _ in 0..n {
            status.push(c % 3);
            c /= 3;
        }
        let basic: Vec<usize> = (0..n).filter(|&j| status[j] == 2).collect();
        if basic.len() != m {
            continue;
        }
        let mut x: Vec<f64> = (0..n)
            .map(|j| match status[j] {
                0 => lp.lower[j],
                1 => lp.upper[j],
                _ => 0.0,
            })
            .collect();
        if m > 0 {
            let a: Vec<Vec<f64>> = (0..m).map(|i| basic.iter().map(|&j| lp.a[i][j]).collect()).collect();
            let rhs: Vec<f64> = (0..m)
                .map(|i| lp.b[i] - (0..n).filter(|j| status[*j] != 2).map(|j| lp.a[i][j] * x[j]).sum::<f64>())
                .collect();
            let Some(v) = solve_square(a, rhs) else { continue };
            for (k, &j) in basic.iter().enumerate() {
                x[j] = v[k];
            }
        }
        if (0..n).any(|j| x[j] < lp.lower[j] - 1e-9 || x[j] > lp.upper[j] + 1e-9) {
            continue;
        }
        let obj: f64 = x.iter().zip(&lp.objective).map(|(a, b)| a * b).sum();
        if best.as_ref().is_none_or(|(o, _)| obj > *o) {
            best = Some((obj, x));
        }
    }
    best
}

/// Average linkage by recomputing every cluster-pair mean from scratch each
/// merge. Ties go to the lexicographically smallest (min index, min index)
/// pair. Returns labels numbered by each cluster's smallest member.
pub fn brute_average_linkage(d: &[f64], n: usize, k: usize) -> (Vec<usize>, Vec<f64>) {
    let mut clusters: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut heights = Vec::new();
    while clusters.len() > k {
        let mut best = (f64::INFINITY, usize::MAX, usize::MAX);
        for a in 0..clusters.len() {
            for b in a + 1..clusters.len() {
                let mut s = 0.0;
                for &i in &clusters[a] {
                    for &j in &clusters[b] {
                        s += d[i * n + j];
                    }
                }
                let avg = s / (clusters[a].len() * clusters[b].len()) as f64;
                let key = (clusters[a][0], clusters[b][0]);
                if avg < best.0 - 1e-12 || ((avg - best.0).abs() <= 1e-12 && key < (clusters[best.1][0], clusters[best.2][0]))
                {
                    best = (avg, a, b);
                }
            }
        }
        let merged = clusters.remove(best.2);
        clusters[best.1].extend(merged);
        clusters[best.1].sort_unstable();
        clusters.sort_by_key(|c| c[0]);
        heights.push(best.0);
    }
    let mut labels = vec![0; n];
    for (l, c) in clusters.iter().enumerate() {
        for &i in c {
            labels[i] = l;
        }
    }
    (labels, heights)
}

/// Untrained ensemble over a given spec with identity normalization.
pub fn untrained_ensemble(spec: &EncoderSpec, seeds: &[u64]) -> EnsembleModel {
    let features = spec.input_shape.iter().product();
    EnsembleModel {
        spec: spec.clone(),
        members: seeds.iter().map(|&s| init_encoder::<f32>(spec, s).unwrap()).collect(),
        normalization: Normalization { mean: vec![0.0; features], std: vec![1.0; features] },
        loss_curves: vec![Vec::new(); seeds.len()],
        member_seeds: seeds.to_vec(),
    }
}

/// Random network of `n` reactions over `m` metabolites with dense continuous
/// stoichiometry and bounds straddling zero, so the zero flux is feasible.
pub fn random_network(seed: u64, n: usize, m: usize) -> FluxNetwork {
    let mut rng = rng_from_seed(seed);
    let metabolites: Vec<String> = (0..m).map(|i| format!("m{i}")).collect();
    let reactions = (0..n)
        .map(|j| Reaction {
            id: format!("R{j}"),
            subsystem: format!("S{}", j % 2),
            lower_bound: -5.0 * rng.random::<f64>(),
            upper_bound: 5.0 * rng.random::<f64>(),
            objective: rng.random::<f64>() * 2.0 - 1.0,
            cost: 0.0,
            stoichiometry: metabolites.iter().map(|id| (id.clone(), rng.random::<f64>() * 4.0 - 2.0)).collect(),
        })
        .collect();
    FluxNetwork { name: format!("random-{seed}"), metabolites, reactions }
}

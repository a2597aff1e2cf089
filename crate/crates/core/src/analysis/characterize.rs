use serde::Serialize;

use super::stats::{mean, quantile_sorted, var_sample};
use super::AnalysisError;

/// Five-number summary plus counts over shared bins.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Distribution {
    pub count: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
    /// Counts over equal-width bins spanning the whole dataset's range.
    pub bins: Vec<usize>,
}

impl Distribution {
    fn of(values: &[f64], lo: f64, hi: f64, nbins: usize) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut bins = vec![0; nbins];
        for &v in values {
            let b = if hi > lo { (((v - lo) / (hi - lo)) * nbins as f64).floor() as usize } else { 0 };
            bins[b.min(nbins - 1)] += 1;
        }
        Some(Self {
            count: values.len(),
            min: sorted[0],
            q1: quantile_sorted(&sorted, 0.25),
            median: quantile_sorted(&sorted, 0.5),
            q3: quantile_sorted(&sorted, 0.75),
            max: sorted[sorted.len() - 1],
            mean: mean(values),
            bins,
        })
    }
}

/// Per-cluster distributions, one per described column; `None` for empty
/// clusters.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClusterProfile {
    pub label: usize,
    pub size: usize,
    pub columns: Vec<Option<Distribution>>,
}

/// Largest difference of cluster means on one column, in pooled standard
/// deviations of the two clusters involved.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Separation {
    pub column: String,
    pub clusters: (usize, usize),
    pub pooled_std_units: f64,
}

/// Describes every column within every cluster. `columns[c]` holds one value
/// per point; bin edges are shared across clusters.
pub fn characterize_clusters(
    labels: &[usize],
    k: usize,
    names: &[String],
    columns: &[Vec<f64>],
    nbins: usize,
) -> Result<(Vec<ClusterProfile>, Vec<Separation>), AnalysisError> {
    if names.len() != columns.len() {
        return Err(AnalysisError::Invalid(format!("{} names for {} columns", names.len(), columns.len())));
    }
    if nbins == 0 {
        return Err(AnalysisError::Invalid("need at least one bin".into()));
    }
    if let Some(c) = columns.iter().position(|c| c.len() != labels.len()) {
        return Err(AnalysisError::Invalid(format!("column {} has {} values for {} points", names[c], columns[c].len(), labels.len())));
    }
    if let Some(&l) = labels.iter().find(|&&l| l >= k) {
        return Err(AnalysisError::Invalid(format!("label {l} outside 0..{k}")));
    }
    let members: Vec<Vec<usize>> = (0..k).map(|c| (0..labels.len()).filter(|&i| labels[i] == c).collect()).collect();
    let ranges: Vec<(f64, f64)> = columns
        .iter()
        .map(|col| col.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v))))
        .collect();
    let profiles = members
        .iter()
        .enumerate()
        .map(|(label, idx)| ClusterProfile {
            label,
            size: idx.len(),
            columns: columns
                .iter()
                .zip(&ranges)
                .map(|(col, &(lo, hi))| {
                    let v: Vec<f64> = idx.iter().map(|&i| col[i]).collect();
                    Distribution::of(&v, lo, hi, nbins)
                })
                .collect(),
        })
        .collect();
    let mut separations = Vec::with_capacity(columns.len());
    for (name, col) in names.iter().zip(columns) {
        let mut best = Separation { column: name.clone(), clusters: (0, 0), pooled_std_units: 0.0 };
        for a in 0..k {
            for b in a + 1..k {
                let va: Vec<f64> = members[a].iter().map(|&i| col[i]).collect();
                let vb: Vec<f64> = members[b].iter().map(|&i| col[i]).collect();
                if va.is_empty() || vb.is_empty() {
                    continue;
                }
                let (na, nb) = (va.len() as f64, vb.len() as f64);
                let dof = na + nb - 2.0;
                let pooled =
                    if dof > 0.0 { (((na - 1.0) * var_sample(&va) + (nb - 1.0) * var_sample(&vb)) / dof).sqrt() } else { 0.0 };
                let gap = (mean(&va) - mean(&vb)).abs();
                let units = if pooled > 0.0 {
                    gap / pooled
                } else if gap > 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                };
                if units > best.pooled_std_units {
                    best = Separation { column: name.clone(), clusters: (a, b), pooled_std_units: units };
                }
            }
        }
        separations.push(best);
    }
    Ok((profiles, separations))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cluster_is_the_whole_dataset() {
        let col = vec![1.0, 4.0, 2.0, 3.0];
        let (p, s) = characterize_clusters(&[0; 4], 1, &["x".into()], &[col], 3).unwrap();
        let d = p[0].columns[0].as_ref().unwrap();
        assert_eq!((d.min, d.median, d.max, d.mean), (1.0, 2.5, 4.0, 2.5));
        assert_eq!((d.q1, d.q3), (1.75, 3.25));
        assert_eq!(d.bins, vec![1, 1, 2]);
        assert_eq!(s[0].pooled_std_units, 0.0);
    }

    #[test]
    fn threshold_split_gives_disjoint_ranges() {
        let col: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let labels: Vec<usize> = col.iter().map(|&v| usize::from(v >= 10.0)).collect();
        let (p, s) = characterize_clusters(&labels, 2, &["x".into()], &[col], 4).unwrap();
        let (a, b) = (p[0].columns[0].as_ref().unwrap(), p[1].columns[0].as_ref().unwrap());
        assert!(a.max < b.min);
        assert!(s[0].pooled_std_units > 1.0);
    }

    #[test]
    fn empty_cluster_is_flagged() {
        let (p, _) = characterize_clusters(&[0, 0, 2], 3, &["x".into()], &[vec![1.0, 2.0, 3.0]], 2).unwrap();
        assert_eq!(p[1].size, 0);
        assert!(p[1].columns[0].is_none());
        assert!(characterize_clusters(&[0, 5], 2, &["x".into()], &[vec![1.0, 2.0]], 2).is_err());
    }
}

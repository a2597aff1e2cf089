use serde::{Deserialize, Serialize};

use super::AnalysisError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Linkage {
    #[default]
    Average,
    Single,
    Complete,
}

/// Clusters `a` and `b` (named by their smallest member, `a < b`) joined at
/// `height`, forming a cluster of `size` points.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Merge {
    pub a: usize,
    pub b: usize,
    pub height: f64,
    pub size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClusterResult {
    pub n: usize,
    pub k: usize,
    /// The complete dendrogram, `n - 1` merges in order.
    pub merges: Vec<Merge>,
    /// Cluster of every point at `k`, numbered by smallest member.
    pub labels: Vec<usize>,
}

impl ClusterResult {
    /// Labels after the first `n - k` merges.
    pub fn cut(&self, k: usize) -> Vec<usize> {
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for m in &self.merges[..self.n - k] {
            let (ra, rb) = (find(&mut parent, m.a), find(&mut parent, m.b));
            parent[rb.max(ra)] = rb.min(ra);
        }
        let roots: Vec<usize> = (0..self.n).map(|i| find(&mut parent, i)).collect();
        let mut ids: Vec<usize> = roots.clone();
        ids.sort_unstable();
        ids.dedup();
        roots.iter().map(|r| ids.binary_search(r).unwrap()).collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        for &l in &self.labels {
            s[l] += 1;
        }
        s
    }
}

fn validate(d: &[f64], n: usize, k: usize) -> Result<(), AnalysisError> {
    if n == 0 || d.len() != n * n {
        return Err(AnalysisError::Invalid(format!("distance matrix holds {} values for n = {n}", d.len())));
    }
    if k == 0 || k > n {
        return Err(AnalysisError::Invalid(format!("k = {k} must lie in 1..={n}")));
    }
    for i in 0..n {
        if d[i * n + i] != 0.0 {
            return Err(AnalysisError::Invalid(format!("diagonal entry {i} is not zero")));
        }
        for j in i + 1..n {
            let (a, b) = (d[i * n + j], d[j * n + i]);
            if !a.is_finite() || a < 0.0 || (a - b).abs() > 1e-12 * a.abs().max(1.0) {
                return Err(AnalysisError::Invalid(format!("entries ({i}, {j}) are {a} and {b}")));
            }
        }
    }
    Ok(())
}

/// Agglomerative clustering with Lance-Williams updates. At each step the
/// closest pair merges; equal distances go to the pair with the smallest
/// (first, second) member indices.
pub fn agglomerative_cluster(d: &[f64], n: usize, k: usize, linkage: Linkage) -> Result<ClusterResult, AnalysisError> {
    validate(d, n, k)?;
    let mut dist = d.to_vec();
    let mut size = vec![1usize; n];
    let mut active = vec![true; n];
    // best partner among higher active slots
    let mut best: Vec<(f64, usize)> = vec![(f64::INFINITY, usize::MAX); n];
    let row_best = |dist: &[f64], active: &[bool], i: usize| {
        let mut b = (f64::INFINITY, usize::MAX);
        for j in i + 1..n {
            if active[j] && dist[i * n + j] < b.0 {
                b = (dist[i * n + j], j);
            }
        }
        b
    };
    for i in 0..n {
        best[i] = row_best(&dist, &active, i);
    }
    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    for _ in 1..n {
        let mut pick = (f64::INFINITY, usize::MAX, usize::MAX);
        for i in 0..n {
            if active[i] && best[i].1 != usize::MAX && best[i].0 < pick.0 {
                pick = (best[i].0, i, best[i].1);
            }
        }
        let (height, a, b) = pick;
        let (na, nb) = (size[a] as f64, size[b] as f64);
        active[b] = false;
        for c in 0..n {
            if !active[c] || c == a {
                continue;
            }
            let (dac, dbc) = (dist[a * n + c], dist[b * n + c]);
            let v = match linkage {
                Linkage::Average => (na * dac + nb * dbc) / (na + nb),
                Linkage::Single => dac.min(dbc),
                Linkage::Complete => dac.max(dbc),
            };
            dist[a * n + c] = v;
            dist[c * n + a] = v;
        }
        size[a] += size[b];
        merges.push(Merge { a, b, height, size: size[a] });
        best[a] = row_best(&dist, &active, a);
        for r in 0..n {
            if !active[r] || r == a {
                continue;
            }
            if best[r].1 == a || best[r].1 == b {
                best[r] = row_best(&dist, &active, r);
            } else if r < a && (dist[r * n + a], a) < best[r] {
                best[r] = (dist[r * n + a], a);
            }
        }
    }
    let mut result = ClusterResult { n, k, merges, labels: Vec::new() };
    result.labels = result.cut(k);
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(points: &[f64]) -> Vec<f64> {
        let n = points.len();
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                d[i * n + j] = (points[i] - points[j]).abs();
            }
        }
        d
    }

    #[test]
    fn singletons_and_single_cluster() {
        let d = line(&[0.0, 1.0, 5.0, 6.0]);
        let r = agglomerative_cluster(&d, 4, 4, Linkage::Average).unwrap();
        assert_eq!(r.labels, vec![0, 1, 2, 3]);
        let r = agglomerative_cluster(&d, 4, 2, Linkage::Average).unwrap();
        assert_eq!(r.labels, vec![0, 0, 1, 1]);
        assert_eq!(r.cut(1), vec![0; 4]);
        assert_eq!(r.merges.len(), 3);
        // ties: (0,1) and (2,3) are both at 1; the pair starting at 0 goes first
        assert_eq!((r.merges[0].a, r.merges[0].b), (0, 1));
        assert_eq!(r.merges[2].height, 5.0);
    }

    #[test]
    fn zero_entry_merges_first() {
        let mut d = line(&[0.0, 3.0, 7.0, 12.0]);
        d[2 * 4 + 3] = 0.0;
        d[3 * 4 + 2] = 0.0;
        let r = agglomerative_cluster(&d, 4, 3, Linkage::Average).unwrap();
        assert_eq!((r.merges[0].a, r.merges[0].b, r.merges[0].height), (2, 3, 0.0));
    }

    #[test]
    fn linkages_differ_on_chains() {
        let d = line(&[0.0, 1.0, 2.0, 3.0, 10.0]);
        let single = agglomerative_cluster(&d, 5, 1, Linkage::Single).unwrap();
        let complete = agglomerative_cluster(&d, 5, 1, Linkage::Complete).unwrap();
        assert_eq!(single.merges.last().unwrap().height, 7.0);
        assert_eq!(complete.merges.last().unwrap().height, 10.0);
    }

    #[test]
    fn invalid_matrices() {
        let mut d = line(&[0.0, 1.0, 2.0]);
        assert!(agglomerative_cluster(&d, 3, 0, Linkage::Average).is_err());
        assert!(agglomerative_cluster(&d, 3, 4, Linkage::Average).is_err());
        assert!(agglomerative_cluster(&d[..8], 3, 1, Linkage::Average).is_err());
        d[1] = 5.0;
        assert!(agglomerative_cluster(&d, 3, 1, Linkage::Average).is_err());
        let mut d = line(&[0.0, 1.0]);
        d[0] = 1.0;
        assert!(agglomerative_cluster(&d, 2, 1, Linkage::Average).is_err());
    }
}

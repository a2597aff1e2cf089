use super::ContrastiveError;

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// `1 / (1 + d(p1, p2))` with `d` the Euclidean distance.
pub fn euclid_similarity(p1: &[f64], p2: &[f64]) -> Result<f64, ContrastiveError> {
    if p1.len() != p2.len() {
        return Err(ContrastiveError::Shape(format!("dimensions differ: {} vs {}", p1.len(), p2.len())));
    }
    Ok(1.0 / (1.0 + euclidean(p1, p2)))
}

fn check_layout(rows: usize, dim: usize, len: usize, tau: f64) -> Result<(), ContrastiveError> {
    if dim == 0 || len != rows * dim {
        return Err(ContrastiveError::Shape(format!("{len} values do not form rows of width {dim}")));
    }
    if rows == 0 || rows % 2 != 0 {
        return Err(ContrastiveError::Shape(format!("need an even, non-zero number of rows, got {rows}")));
    }
    if !(tau > 0.0) {
        return Err(ContrastiveError::Config(format!("temperature {tau} must be positive")));
    }
    Ok(())
}

/// NT-Xent loss with Euclidean similarity over `2B` rows of width `dim`,
/// where rows `2k` and `2k + 1` are the two views of input `k`. Averaged over
/// all `2B` anchors.
pub fn ntxent_euclidean(embeddings: &[f64], dim: usize, tau: f64) -> Result<f64, ContrastiveError> {
    Ok(ntxent_euclidean_with_grad(embeddings, dim, tau)?.0)
}

/// Loss and its gradient with respect to every embedding coordinate.
///
/// Coincident distinct rows contribute a zero subgradient to the distance term.
pub fn ntxent_euclidean_with_grad(
    embeddings: &[f64],
    dim: usize,
    tau: f64,
) -> Result<(f64, Vec<f64>), ContrastiveError> {
    let rows = if dim == 0 { 0 } else { embeddings.len() / dim };
    check_layout(rows, dim, embeddings.len(), tau)?;
    let row = |i: usize| &embeddings[i * dim..(i + 1) * dim];

    let mut dist = vec![0.0; rows * rows];
    for i in 0..rows {
        for k in i + 1..rows {
            let d = euclidean(row(i), row(k));
            dist[i * rows + k] = d;
            dist[k * rows + i] = d;
        }
    }
    let sim = |i: usize, k: usize| 1.0 / (1.0 + dist[i * rows + k]);

    // coeff[i][k] = dL/ds(i, k) summed over both anchors later
    let mut coeff = vec![0.0; rows * rows];
    let scale = 1.0 / rows as f64;
    let mut total = 0.0;
    let mut probs = vec![0.0; rows];
    for i in 0..rows {
        let positive = i ^ 1;
        let max = (0..rows).filter(|&k| k != i).map(|k| sim(i, k) / tau).fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        for k in (0..rows).filter(|&k| k != i) {
            probs[k] = (sim(i, k) / tau - max).exp();
            z += probs[k];
        }
        let lse = max + z.ln();
        total += lse - sim(i, positive) / tau;
        for k in (0..rows).filter(|&k| k != i) {
            let p = probs[k] / z;
            let target = if k == positive { 1.0 } else { 0.0 };
            coeff[i * rows + k] += (p - target) / tau * scale;
        }
    }

    let mut grad = vec![0.0; embeddings.len()];
    for i in 0..rows {
        for k in i + 1..rows {
            let d = dist[i * rows + k];
            if d == 0.0 {
                continue;
            }
            let c = coeff[i * rows + k] + coeff[k * rows + i];
            let s = sim(i, k);
            // ds/dd = -s^2, dd/dx_i = (x_i - x_k) / d
            let factor = -c * s * s / d;
            for j in 0..dim {
                let diff = embeddings[i * dim + j] - embeddings[k * dim + j];
                grad[i * dim + j] += factor * diff;
                grad[k * dim + j] -= factor * diff;
            }
        }
    }
    Ok((total * scale, grad))
}

//! Per-sample layer kernels. Every function works on one sample's activations
//! laid out channels-last.

use super::real::Real;

/// `out = bias + x W` with `W` stored `[x.len()][bias.len()]`.
#[inline]
pub(crate) fn affine<T: Real>(x: &[T], w: &[T], bias: &[T], out: &mut [T]) {
    let units = bias.len();
    out.copy_from_slice(bias);
    for (xi, row) in x.iter().zip(w.chunks_exact(units)) {
        let xi = *xi;
        if xi == T::zero() {
            continue;
        }
        for (o, &wij) in out.iter_mut().zip(row) {
            *o += xi * wij;
        }
    }
}

/// Accumulates `dW += x ⊗ g`, `db += g` and, when requested, `dx += W g`.
#[inline]
pub(crate) fn affine_backward<T: Real>(
    x: &[T],
    w: &[T],
    g: &[T],
    dw: &mut [T],
    db: &mut [T],
    dx: Option<&mut [T]>,
) {
    let units = g.len();
    for (d, &gj) in db.iter_mut().zip(g) {
        *d += gj;
    }
    for (xi, drow) in x.iter().zip(dw.chunks_exact_mut(units)) {
        let xi = *xi;
        if xi == T::zero() {
            continue;
        }
        for (d, &gj) in drow.iter_mut().zip(g) {
            *d += xi * gj;
        }
    }
    if let Some(dx) = dx {
        for (dxi, row) in dx.iter_mut().zip(w.chunks_exact(units)) {
            let mut acc = T::zero();
            for (&wij, &gj) in row.iter().zip(g) {
                acc += wij * gj;
            }
            *dxi += acc;
        }
    }
}

pub(crate) struct Conv1dDims {
    pub channels: usize,
    pub filters: usize,
    pub kernel: usize,
    pub stride: usize,
    pub out_len: usize,
}

pub(crate) fn conv1d_forward<T: Real>(d: &Conv1dDims, x: &[T], w: &[T], bias: &[T], out: &mut [T]) {
    let span = d.kernel * d.channels;
    for t in 0..d.out_len {
        let start = t * d.stride * d.channels;
        affine(&x[start..start + span], w, bias, &mut out[t * d.filters..(t + 1) * d.filters]);
    }
}

pub(crate) fn conv1d_backward<T: Real>(
    d: &Conv1dDims,
    x: &[T],
    w: &[T],
    g: &[T],
    dw: &mut [T],
    db: &mut [T],
    mut dx: Option<&mut [T]>,
) {
    let span = d.kernel * d.channels;
    for t in 0..d.out_len {
        let start = t * d.stride * d.channels;
        let gt = &g[t * d.filters..(t + 1) * d.filters];
        let dpatch = dx.as_deref_mut().map(|dx| &mut dx[start..start + span]);
        affine_backward(&x[start..start + span], w, gt, dw, db, dpatch);
    }
}

pub(crate) struct Conv2dDims {
    pub width: usize,
    pub channels: usize,
    pub filters: usize,
    pub kernel: usize,
    pub stride: usize,
    pub out_h: usize,
    pub out_w: usize,
}

impl Conv2dDims {
    #[inline]
    fn gather<T: Real>(&self, x: &[T], i: usize, j: usize, patch: &mut [T]) {
        let row_span = self.kernel * self.channels;
        for di in 0..self.kernel {
            let src = ((i * self.stride + di) * self.width + j * self.stride) * self.channels;
            patch[di * row_span..(di + 1) * row_span].copy_from_slice(&x[src..src + row_span]);
        }
    }

    #[inline]
    fn scatter_add<T: Real>(&self, patch: &[T], i: usize, j: usize, dx: &mut [T]) {
        let row_span = self.kernel * self.channels;
        for di in 0..self.kernel {
            let dst = ((i * self.stride + di) * self.width + j * self.stride) * self.channels;
            for (d, &p) in dx[dst..dst + row_span].iter_mut().zip(&patch[di * row_span..(di + 1) * row_span]) {
                *d += p;
            }
        }
    }
}

pub(crate) fn conv2d_forward<T: Real>(d: &Conv2dDims, x: &[T], w: &[T], bias: &[T], out: &mut [T]) {
    let mut patch = vec![T::zero(); d.kernel * d.kernel * d.channels];
    for i in 0..d.out_h {
        for j in 0..d.out_w {
            d.gather(x, i, j, &mut patch);
            let o = (i * d.out_w + j) * d.filters;
            affine(&patch, w, bias, &mut out[o..o + d.filters]);
        }
    }
}

pub(crate) fn conv2d_backward<T: Real>(
    d: &Conv2dDims,
    x: &[T],
    w: &[T],
    g: &[T],
    dw: &mut [T],
    db: &mut [T],
    mut dx: Option<&mut [T]>,
) {
    let n = d.kernel * d.kernel * d.channels;
    let mut patch = vec![T::zero(); n];
    let mut dpatch = vec![T::zero(); n];
    for i in 0..d.out_h {
        for j in 0..d.out_w {
            d.gather(x, i, j, &mut patch);
            let o = (i * d.out_w + j) * d.filters;
            let gij = &g[o..o + d.filters];
            match dx.as_deref_mut() {
                Some(dx) => {
                    dpatch.iter_mut().for_each(|v| *v = T::zero());
                    affine_backward(&patch, w, gij, dw, db, Some(&mut dpatch));
                    d.scatter_add(&dpatch, i, j, dx);
                }
                None => affine_backward(&patch, w, gij, dw, db, None),
            }
        }
    }
}

/// Max over non-overlapping windows of a `[len, channels]` input; the first
/// maximal element wins ties.
pub(crate) fn maxpool1d_forward<T: Real>(
    channels: usize,
    window: usize,
    out_len: usize,
    x: &[T],
    out: &mut [T],
    argmax: &mut [u32],
) {
    for t in 0..out_len {
        for c in 0..channels {
            let mut best_idx = t * window * channels + c;
            let mut best = x[best_idx];
            for q in 1..window {
                let idx = (t * window + q) * channels + c;
                if x[idx] > best {
                    best = x[idx];
                    best_idx = idx;
                }
            }
            out[t * channels + c] = best;
            argmax[t * channels + c] = best_idx as u32;
        }
    }
}

pub(crate) struct Pool2dDims {
    pub width: usize,
    pub channels: usize,
    pub window: usize,
    pub out_h: usize,
    pub out_w: usize,
}

pub(crate) fn maxpool2d_forward<T: Real>(d: &Pool2dDims, x: &[T], out: &mut [T], argmax: &mut [u32]) {
    for i in 0..d.out_h {
        for j in 0..d.out_w {
            for c in 0..d.channels {
                let mut best_idx = ((i * d.window) * d.width + j * d.window) * d.channels + c;
                let mut best = x[best_idx];
                for di in 0..d.window {
                    for dj in 0..d.window {
                        let idx = ((i * d.window + di) * d.width + j * d.window + dj) * d.channels + c;
                        if x[idx] > best {
                            best = x[idx];
                            best_idx = idx;
                        }
                    }
                }
                let o = (i * d.out_w + j) * d.channels + c;
                out[o] = best;
                argmax[o] = best_idx as u32;
            }
        }
    }
}

pub(crate) fn maxpool_backward<T: Real>(argmax: &[u32], g: &[T], dx: &mut [T]) {
    for (&idx, &gv) in argmax.iter().zip(g) {
        dx[idx as usize] += gv;
    }
}

pub(crate) fn gap_forward<T: Real>(positions: usize, channels: usize, x: &[T], out: &mut [T]) {
    out.iter_mut().for_each(|v| *v = T::zero());
    for row in x.chunks_exact(channels) {
        for (o, &v) in out.iter_mut().zip(row) {
            *o += v;
        }
    }
    let scale = T::one() / T::of(positions as f64);
    out.iter_mut().for_each(|v| *v *= scale);
}

pub(crate) fn gap_backward<T: Real>(positions: usize, channels: usize, g: &[T], dx: &mut [T]) {
    let scale = T::one() / T::of(positions as f64);
    for row in dx.chunks_exact_mut(channels) {
        for (d, &gv) in row.iter_mut().zip(g) {
            *d += gv * scale;
        }
    }
}

use super::kernels::{self, Conv1dDims, Conv2dDims, Pool2dDims};
use super::real::Real;
use super::spec::{EncoderSpec, Op, Plan};
use super::weights::{initialize, EncoderWeights};
use super::NnError;

/// A projection network: architecture plus parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Encoder<T> {
    spec: EncoderSpec,
    plan: Plan,
    pub weights: EncoderWeights<T>,
}

/// Activations recorded by [`Encoder::forward`] for the backward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache<T> {
    batch: usize,
    /// Input of every layer, `batch * size` values each.
    inputs: Vec<Vec<T>>,
    /// Argmax positions of max-pool layers (empty for other layers).
    argmax: Vec<Vec<u32>>,
}

impl<T> ForwardCache<T> {
    pub fn batch(&self) -> usize {
        self.batch
    }

    /// Pre-activation values feeding every relu layer.
    pub(crate) fn layer_input(&self, layer: usize) -> &[T] {
        &self.inputs[layer]
    }
}

/// Seeded initialization of a new encoder.
pub fn init_encoder<T: Real>(spec: &EncoderSpec, seed: u64) -> Result<Encoder<T>, NnError> {
    let plan = spec.plan()?;
    let weights = initialize(spec, &plan, seed);
    Ok(Encoder { spec: spec.clone(), plan, weights })
}

impl<T: Real> Encoder<T> {
    /// Wraps existing parameters, checking they fit `spec`.
    pub fn from_weights(spec: &EncoderSpec, weights: EncoderWeights<T>) -> Result<Self, NnError> {
        let plan = spec.plan()?;
        let expected = EncoderWeights::<T>::zeros_for(&plan, weights.init_seed);
        if !expected.same_layout(&weights) {
            return Err(NnError::ParamCount { expected: expected.param_count(), got: weights.param_count() });
        }
        if !weights.is_finite() {
            return Err(NnError::NonFinite("weights".into()));
        }
        Ok(Self { spec: spec.clone(), plan, weights })
    }

    pub fn spec(&self) -> &EncoderSpec {
        &self.spec
    }

    pub fn input_size(&self) -> usize {
        self.plan.input_size()
    }

    pub fn output_dim(&self) -> usize {
        self.plan.output_size()
    }

    pub(crate) fn ops(&self) -> &[Op] {
        &self.plan.ops
    }

    pub fn cast<U: Real>(&self) -> Encoder<U> {
        Encoder { spec: self.spec.clone(), plan: self.plan.clone(), weights: self.weights.cast() }
    }

    fn check_batch(&self, batch: &[T], b: usize) -> Result<(), NnError> {
        if b == 0 {
            return Err(NnError::Input("batch must hold at least one sample".into()));
        }
        if batch.len() != b * self.input_size() {
            return Err(NnError::Input(format!(
                "batch has {} values, expected {} x {}",
                batch.len(),
                b,
                self.input_size()
            )));
        }
        if let Some(pos) = batch.iter().position(|v| !v.is_finite()) {
            return Err(NnError::Input(format!("non-finite input value at flat index {pos}")));
        }
        Ok(())
    }

    /// Embeddings of `b` samples laid out row-major, with the activation record.
    pub fn forward(&self, batch: &[T], b: usize) -> Result<(Vec<T>, ForwardCache<T>), NnError> {
        self.check_batch(batch, b)?;
        let n_layers = self.plan.ops.len();
        let mut inputs = Vec::with_capacity(n_layers);
        let mut argmax = Vec::with_capacity(n_layers);
        let mut cur = batch.to_vec();
        for i in 0..n_layers {
            let (next, am) = self.layer_forward(i, &cur, b);
            inputs.push(cur);
            argmax.push(am);
            cur = next;
        }
        Ok((cur, ForwardCache { batch: b, inputs, argmax }))
    }

    /// Forward pass without keeping activations.
    pub fn embed(&self, batch: &[T], b: usize) -> Result<Vec<T>, NnError> {
        self.check_batch(batch, b)?;
        let mut cur = batch.to_vec();
        for i in 0..self.plan.ops.len() {
            cur = self.layer_forward(i, &cur, b).0;
        }
        Ok(cur)
    }

    fn layer_forward(&self, i: usize, x: &[T], b: usize) -> (Vec<T>, Vec<u32>) {
        let in_size = self.plan.size(i);
        let out_size = self.plan.size(i + 1);
        let params = &self.weights.layers[i];
        let mut out = vec![T::zero(); b * out_size];
        let mut argmax = Vec::new();
        let samples = x.chunks_exact(in_size).zip(out.chunks_exact_mut(out_size));
        match self.plan.ops[i] {
            Op::Dense { .. } => {
                for (xs, os) in samples {
                    kernels::affine(xs, &params.weights, &params.bias, os);
                }
            }
            Op::Conv1d { channels, filters, kernel, stride, out_len, .. } => {
                let d = Conv1dDims { channels, filters, kernel, stride, out_len };
                for (xs, os) in samples {
                    kernels::conv1d_forward(&d, xs, &params.weights, &params.bias, os);
                }
            }
            Op::Conv2d { width, channels, filters, kernel, stride, out_h, out_w, .. } => {
                let d = Conv2dDims { width, channels, filters, kernel, stride, out_h, out_w };
                for (xs, os) in samples {
                    kernels::conv2d_forward(&d, xs, &params.weights, &params.bias, os);
                }
            }
            Op::MaxPool1d { channels, window, out_len, .. } => {
                argmax = vec![0u32; b * out_size];
                for ((xs, os), am) in samples.zip(argmax.chunks_exact_mut(out_size)) {
                    kernels::maxpool1d_forward(channels, window, out_len, xs, os, am);
                }
            }
            Op::MaxPool2d { width, channels, window, out_h, out_w, .. } => {
                let d = Pool2dDims { width, channels, window, out_h, out_w };
                argmax = vec![0u32; b * out_size];
                for ((xs, os), am) in samples.zip(argmax.chunks_exact_mut(out_size)) {
                    kernels::maxpool2d_forward(&d, xs, os, am);
                }
            }
            Op::GlobalAvgPool { positions, channels } => {
                for (xs, os) in samples {
                    kernels::gap_forward(positions, channels, xs, os);
                }
            }
            Op::Relu => {
                for (o, &v) in out.iter_mut().zip(x) {
                    *o = if v > T::zero() { v } else { T::zero() };
                }
            }
            Op::Identity => out.copy_from_slice(x),
        }
        (out, argmax)
    }

    /// Parameter gradients of the scalar loss whose gradient with respect to
    /// the embeddings is `grad_out`.
    pub fn backward(&self, cache: &ForwardCache<T>, grad_out: &[T]) -> Result<EncoderWeights<T>, NnError> {
        let b = cache.batch;
        if cache.inputs.len() != self.plan.ops.len() {
            return Err(NnError::Cache("activation record does not match this network".into()));
        }
        for (i, input) in cache.inputs.iter().enumerate() {
            if input.len() != b * self.plan.size(i) {
                return Err(NnError::Cache(format!("layer {i} activations have the wrong size")));
            }
        }
        if grad_out.len() != b * self.output_dim() {
            return Err(NnError::Cache(format!(
                "gradient has {} values, expected {} x {}",
                grad_out.len(),
                b,
                self.output_dim()
            )));
        }

        let mut grads = self.weights.zeros_like();
        let mut g = grad_out.to_vec();
        for i in (0..self.plan.ops.len()).rev() {
            let need_dx = i > 0;
            g = self.layer_backward(i, cache, &g, &mut grads, need_dx);
        }
        Ok(grads)
    }

    fn layer_backward(
        &self,
        i: usize,
        cache: &ForwardCache<T>,
        g: &[T],
        grads: &mut EncoderWeights<T>,
        need_dx: bool,
    ) -> Vec<T> {
        let b = cache.batch;
        let in_size = self.plan.size(i);
        let out_size = self.plan.size(i + 1);
        let x = &cache.inputs[i];
        let params = &self.weights.layers[i];
        let grad = &mut grads.layers[i];
        let mut dx = if need_dx { vec![T::zero(); b * in_size] } else { Vec::new() };
        let dx_rows = |dx: &mut Vec<T>, s: usize| -> Option<std::ops::Range<usize>> {
            (!dx.is_empty()).then(|| s * in_size..(s + 1) * in_size)
        };
        match self.plan.ops[i] {
            Op::Dense { .. } => {
                for s in 0..b {
                    let range = dx_rows(&mut dx, s);
                    kernels::affine_backward(
                        &x[s * in_size..(s + 1) * in_size],
                        &params.weights,
                        &g[s * out_size..(s + 1) * out_size],
                        &mut grad.weights,
                        &mut grad.bias,
                        range.map(|r| &mut dx[r]),
                    );
                }
            }
            Op::Conv1d { channels, filters, kernel, stride, out_len, .. } => {
                let d = Conv1dDims { channels, filters, kernel, stride, out_len };
                for s in 0..b {
                    let range = dx_rows(&mut dx, s);
                    kernels::conv1d_backward(
                        &d,
                        &x[s * in_size..(s + 1) * in_size],
                        &params.weights,
                        &g[s * out_size..(s + 1) * out_size],
                        &mut grad.weights,
                        &mut grad.bias,
                        range.map(|r| &mut dx[r]),
                    );
                }
            }
            Op::Conv2d { width, channels, filters, kernel, stride, out_h, out_w, .. } => {
                let d = Conv2dDims { width, channels, filters, kernel, stride, out_h, out_w };
                for s in 0..b {
                    let range = dx_rows(&mut dx, s);
                    kernels::conv2d_backward(
                        &d,
                        &x[s * in_size..(s + 1) * in_size],
                        &params.weights,
                        &g[s * out_size..(s + 1) * out_size],
                        &mut grad.weights,
                        &mut grad.bias,
                        range.map(|r| &mut dx[r]),
                    );
                }
            }
            Op::MaxPool1d { .. } | Op::MaxPool2d { .. } => {
                if need_dx {
                    let am = &cache.argmax[i];
                    for s in 0..b {
                        kernels::maxpool_backward(
                            &am[s * out_size..(s + 1) * out_size],
                            &g[s * out_size..(s + 1) * out_size],
                            &mut dx[s * in_size..(s + 1) * in_size],
                        );
                    }
                }
            }
            Op::GlobalAvgPool { positions, channels } => {
                if need_dx {
                    for s in 0..b {
                        kernels::gap_backward(
                            positions,
                            channels,
                            &g[s * out_size..(s + 1) * out_size],
                            &mut dx[s * in_size..(s + 1) * in_size],
                        );
                    }
                }
            }
            Op::Relu => {
                if need_dx {
                    for ((d, &gv), &xv) in dx.iter_mut().zip(g).zip(x) {
                        *d = if xv > T::zero() { gv } else { T::zero() };
                    }
                }
            }
            Op::Identity => {
                if need_dx {
                    dx.copy_from_slice(g);
                }
            }
        }
        dx
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::spec::{EncoderSpec, Layer};

    fn single_dense() -> Encoder<f64> {
        let spec = EncoderSpec::new(vec![2], vec![Layer::dense(2)], 2);
        let mut enc = init_encoder::<f64>(&spec, 0).unwrap();
        enc.weights.layers[0].weights = vec![1.0, 2.0, 3.0, 4.0];
        enc.weights.layers[0].bias = vec![0.0, 0.0];
        enc
    }

    #[test]
    fn dense_uses_row_vector_convention() {
        let enc = single_dense();
        let (out, _) = enc.forward(&[1.0, 1.0], 1).unwrap();
        assert_eq!(out, vec![4.0, 6.0]);
    }

    #[test]
    fn zero_weights_give_zero_embeddings() {
        let spec = EncoderSpec::default_vector(5, 16);
        let mut enc = init_encoder::<f64>(&spec, 3).unwrap();
        enc.weights.iter_mut().for_each(|v| *v = 0.0);
        let (out, _) = enc.forward(&[0.3, -1.0, 2.0, 0.5, 7.0], 1).unwrap();
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn conv1d_identity_kernel_copies_input() {
        let spec = EncoderSpec::new(
            vec![6, 1],
            vec![Layer::conv1d(1, 3), Layer::Flatten, Layer::Dense { units: 4, inputs: Some(4) }],
            4,
        );
        let mut enc = init_encoder::<f64>(&spec, 0).unwrap();
        enc.weights.layers[0].weights = vec![1.0, 0.0, 0.0];
        enc.weights.layers[0].bias = vec![0.0];
        let identity: Vec<f64> = (0..16).map(|k| if k % 5 == 0 { 1.0 } else { 0.0 }).collect();
        enc.weights.layers[2].weights = identity;
        enc.weights.layers[2].bias = vec![0.0; 4];
        let x = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0];
        let (out, cache) = enc.forward(&x, 1).unwrap();
        assert_eq!(out, vec![3.0, 1.0, 4.0, 1.0]);
        assert_eq!(cache.batch(), 1);
    }

    #[test]
    fn zero_grad_gives_zero_gradients() {
        let spec = EncoderSpec::default_timeseries(20, 3, 4);
        let enc = init_encoder::<f64>(&spec, 9).unwrap();
        let x: Vec<f64> = (0..120).map(|k| (k as f64 * 0.37).sin()).collect();
        let (_, cache) = enc.forward(&x, 2).unwrap();
        let grads = enc.backward(&cache, &[0.0; 8]).unwrap();
        assert!(grads.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn linear_dense_gradient_is_outer_product() {
        let enc = single_dense();
        let x = [0.5, -2.0, 1.5, 3.0];
        let g = [1.0, -1.0, 0.25, 2.0];
        let (_, cache) = enc.forward(&x, 2).unwrap();
        let grads = enc.backward(&cache, &g).unwrap();
        // dW[i][j] = sum_b x[b][i] g[b][j]
        let expected = [
            0.5 * 1.0 + 1.5 * 0.25,
            0.5 * -1.0 + 1.5 * 2.0,
            -2.0 * 1.0 + 3.0 * 0.25,
            -2.0 * -1.0 + 3.0 * 2.0,
        ];
        assert_eq!(grads.layers[0].weights, expected.to_vec());
        assert_eq!(grads.layers[0].bias, vec![1.25, 1.0]);
    }

    #[test]
    fn batch_forward_equals_per_sample() {
        let spec = EncoderSpec::new(
            vec![8, 8, 2],
            vec![
                Layer::conv2d(3, 3),
                Layer::relu(),
                Layer::Maxpool { window: 2 },
                Layer::Flatten,
                Layer::dense(4),
            ],
            4,
        );
        let enc = init_encoder::<f32>(&spec, 5).unwrap();
        let x: Vec<f32> = (0..3 * 128).map(|k| ((k * 7919) % 97) as f32 / 50.0 - 1.0).collect();
        let batched = enc.embed(&x, 3).unwrap();
        let mut single = Vec::new();
        for s in 0..3 {
            single.extend(enc.embed(&x[s * 128..(s + 1) * 128], 1).unwrap());
        }
        assert_eq!(batched, single);
    }

    #[test]
    fn maxpool_routes_ties_to_first() {
        let spec = EncoderSpec::new(
            vec![4, 1],
            vec![Layer::Maxpool { window: 2 }, Layer::Flatten, Layer::Dense { units: 2, inputs: Some(2) }],
            2,
        );
        let mut enc = init_encoder::<f64>(&spec, 0).unwrap();
        enc.weights.layers[2].weights = vec![1.0, 0.0, 0.0, 1.0];
        let x = [2.0, 2.0, 1.0, 3.0];
        let (out, cache) = enc.forward(&x, 1).unwrap();
        assert_eq!(out, vec![2.0, 3.0]);
        assert_eq!(cache.argmax[0], vec![0, 3]);
    }

    #[test]
    fn non_finite_input_is_rejected() {
        let enc = single_dense();
        assert!(matches!(enc.forward(&[f64::NAN, 1.0], 1), Err(NnError::Input(_))));
        assert!(matches!(enc.forward(&[], 0), Err(NnError::Input(_))));
    }

    #[test]
    fn mismatched_gradient_is_rejected() {
        let enc = single_dense();
        let (_, cache) = enc.forward(&[1.0, 1.0], 1).unwrap();
        assert!(matches!(enc.backward(&cache, &[1.0]), Err(NnError::Cache(_))));
    }
}

use serde::{Deserialize, Serialize};

use super::real::Real;
use super::weights::EncoderWeights;
use super::NnError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { learning_rate: 1e-3, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// Adam moments and step counter for one set of weights.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<T> {
    pub t: u64,
    pub m: EncoderWeights<T>,
    pub v: EncoderWeights<T>,
    pub config: AdamConfig,
}

impl<T: Real> AdamState<T> {
    pub fn new(weights: &EncoderWeights<T>, config: AdamConfig) -> Self {
        Self { t: 0, m: weights.zeros_like(), v: weights.zeros_like(), config }
    }
}

/// One bias-corrected Adam update of `weights` along `grads`.
pub fn adam_step<T: Real>(
    weights: &mut EncoderWeights<T>,
    grads: &EncoderWeights<T>,
    state: &mut AdamState<T>,
) -> Result<(), NnError> {
    if !weights.same_layout(grads) || !weights.same_layout(&state.m) || !weights.same_layout(&state.v) {
        return Err(NnError::ParamCount { expected: weights.param_count(), got: grads.param_count() });
    }
    let AdamConfig { learning_rate, beta1, beta2, epsilon } = state.config;
    state.t += 1;
    let t = state.t as i32;
    let c1 = 1.0 - beta1.powi(t);
    let c2 = 1.0 - beta2.powi(t);
    let (b1, b2) = (T::of(beta1), T::of(beta2));
    let (one_b1, one_b2) = (T::of(1.0 - beta1), T::of(1.0 - beta2));
    let (inv_c1, inv_c2) = (T::of(1.0 / c1), T::of(1.0 / c2));
    let (lr, eps) = (T::of(learning_rate), T::of(epsilon));
    let moments = state.m.iter_mut().zip(state.v.iter_mut());
    for ((w, &g), (m, v)) in weights.iter_mut().zip(grads.iter()).zip(moments) {
        *m = b1 * *m + one_b1 * g;
        *v = b2 * *v + one_b2 * g * g;
        let m_hat = *m * inv_c1;
        let v_hat = *v * inv_c2;
        *w -= lr * m_hat / (v_hat.sqrt() + eps);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{init_encoder, EncoderSpec, Layer};

    fn weights() -> EncoderWeights<f64> {
        let spec = EncoderSpec::new(vec![3], vec![Layer::dense(4), Layer::relu(), Layer::dense(2)], 2);
        init_encoder::<f64>(&spec, 1).unwrap().weights
    }

    #[test]
    fn zero_gradient_leaves_weights() {
        let mut w = weights();
        let before = w.clone();
        let mut state = AdamState::new(&w, AdamConfig::default());
        adam_step(&mut w, &before.zeros_like(), &mut state).unwrap();
        assert_eq!(w, before);
        assert_eq!(state.t, 1);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut w = weights();
        let before = w.clone();
        let mut grads = w.zeros_like();
        for (k, g) in grads.iter_mut().enumerate() {
            *g = if k % 2 == 0 { 0.3 + k as f64 * 0.01 } else { -2.0 };
        }
        let config = AdamConfig::default();
        let mut state = AdamState::new(&w, config);
        adam_step(&mut w, &grads, &mut state).unwrap();
        let lr = config.learning_rate;
        for ((a, b), g) in w.iter().zip(before.iter()).zip(grads.iter()) {
            let delta = a - b;
            assert!(delta.abs() >= 0.999 * lr && delta.abs() <= lr, "delta {delta}");
            assert_eq!(delta.signum(), -g.signum());
        }
    }

    /// Scalar Adam written out directly, independent of the layer plumbing.
    fn reference_adam_on_square(steps: usize, lr: f64) -> f64 {
        let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8);
        let (mut w, mut m, mut v) = (1.0f64, 0.0f64, 0.0f64);
        for t in 1..=steps {
            let g = 2.0 * w;
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let mh = m / (1.0 - b1.powi(t as i32));
            let vh = v / (1.0 - b2.powi(t as i32));
            w -= lr * mh / (vh.sqrt() + eps);
        }
        w
    }

    #[test]
    fn minimizes_square() {
        let reference = reference_adam_on_square(100, 0.1);
        assert!(reference.abs() < 0.5, "reference {reference}");

        let mut w = EncoderWeights { layers: vec![crate::nn::LayerParams { weights: vec![1.0f64], bias: vec![] }], init_seed: 0 };
        let mut state = AdamState::new(&w, AdamConfig { learning_rate: 0.1, ..AdamConfig::default() });
        for _ in 0..100 {
            let mut g = w.zeros_like();
            g.layers[0].weights[0] = 2.0 * w.layers[0].weights[0];
            adam_step(&mut w, &g, &mut state).unwrap();
        }
        let got = w.layers[0].weights[0];
        assert!(got.abs() < 0.5);
        assert!((got - reference).abs() < 1e-12, "{got} vs {reference}");
    }

    #[test]
    fn layout_mismatch_is_rejected() {
        let mut w = weights();
        let other = EncoderWeights::<f64> { layers: vec![], init_seed: 0 };
        let mut state = AdamState::new(&w, AdamConfig::default());
        assert!(adam_step(&mut w, &other, &mut state).is_err());
    }
}

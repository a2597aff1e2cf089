use rand::Rng;

use super::real::Real;
use super::spec::{Activation, EncoderSpec, Layer, Plan};
use super::NnError;
use crate::rng::{derive_seed, rng_from_seed};

/// Parameters of one layer. Layers without parameters hold empty vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerParams<T> {
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Real> LayerParams<T> {
    fn zeros(weights: usize, bias: usize) -> Self {
        Self { weights: vec![T::zero(); weights], bias: vec![T::zero(); bias] }
    }

    pub fn len(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Trained (or freshly initialized) parameters of an encoder. Also used for
/// gradients and optimizer moments, which share the same layout.
#[derive(Clone, Debug, PartialEq)]
pub struct EncoderWeights<T> {
    pub layers: Vec<LayerParams<T>>,
    pub init_seed: u64,
}

impl<T: Real> EncoderWeights<T> {
    pub(crate) fn zeros_for(plan: &Plan, init_seed: u64) -> Self {
        let layers = plan
            .ops
            .iter()
            .map(|op| match op.param_shape() {
                Some((w, b, _, _)) => LayerParams::zeros(w, b),
                None => LayerParams::zeros(0, 0),
            })
            .collect();
        Self { layers, init_seed }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            layers: self.layers.iter().map(|l| LayerParams::zeros(l.weights.len(), l.bias.len())).collect(),
            init_seed: self.init_seed,
        }
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(LayerParams::len).sum()
    }

    /// All parameters in canonical order: per layer, weights then biases.
    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(l.bias.iter()))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut T> {
        self.layers.iter_mut().flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
    }

    pub fn to_flat(&self) -> Vec<T> {
        self.iter().copied().collect()
    }

    /// Refills every parameter from `flat` in canonical order.
    pub fn load_flat(&mut self, flat: &[T]) -> Result<(), NnError> {
        if flat.len() != self.param_count() {
            return Err(NnError::ParamCount { expected: self.param_count(), got: flat.len() });
        }
        for (dst, &src) in self.iter_mut().zip(flat) {
            *dst = src;
        }
        Ok(())
    }

    pub fn same_layout(&self, other: &Self) -> bool {
        self.layers.len() == other.layers.len()
            && self
                .layers
                .iter()
                .zip(&other.layers)
                .all(|(a, b)| a.weights.len() == b.weights.len() && a.bias.len() == b.bias.len())
    }

    pub fn is_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }

    pub fn cast<U: Real>(&self) -> EncoderWeights<U> {
        EncoderWeights {
            layers: self
                .layers
                .iter()
                .map(|l| LayerParams {
                    weights: l.weights.iter().map(|v| U::of(v.as_f64())).collect(),
                    bias: l.bias.iter().map(|v| U::of(v.as_f64())).collect(),
                })
                .collect(),
            init_seed: self.init_seed,
        }
    }
}

/// He-uniform weights for layers feeding a relu, Glorot-uniform otherwise,
/// zero biases. Layer `i` draws from the stream `derive_seed(seed, i)`.
pub(crate) fn initialize<T: Real>(spec: &EncoderSpec, plan: &Plan, seed: u64) -> EncoderWeights<T> {
    let mut weights = EncoderWeights::zeros_for(plan, seed);
    for (i, op) in plan.ops.iter().enumerate() {
        let Some((_, _, fan_in, fan_out)) = op.param_shape() else { continue };
        let relu_follows =
            matches!(spec.layers.get(i + 1), Some(Layer::Activation { function: Activation::Relu }));
        let limit = if relu_follows {
            (6.0 / fan_in as f64).sqrt()
        } else {
            (6.0 / (fan_in + fan_out) as f64).sqrt()
        };
        let mut rng = rng_from_seed(derive_seed(seed, i as u64));
        for w in weights.layers[i].weights.iter_mut() {
            *w = T::of((rng.random::<f64>() * 2.0 - 1.0) * limit);
        }
    }
    weights
}

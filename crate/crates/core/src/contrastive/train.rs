use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::augment::{augment_into, AugmentationPolicy};
use super::loss::ntxent_euclidean_with_grad;
use super::normalize::{normalize_fit, Normalization, TrainingSet};
use super::ContrastiveError;
use crate::nn::{adam_step, init_encoder, AdamConfig, AdamState, Encoder, EncoderSpec, EncoderWeights};
use crate::rng::{derive_seed, rng_from_seed};
use crate::simulators::SimulationOutput;

/// Stream index for shuffling and augmentation, distinct from the per-layer
/// initialization streams.
const TRAIN_STREAM: u64 = 0x7472_6169_6e00;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub temperature: f64,
    pub epochs: usize,
    pub optimizer: AdamConfig,
    pub ensemble_size: usize,
    /// Base seed; member `k` uses `derive_seed(seed, k)` unless
    /// `member_seeds` lists them explicitly.
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub member_seeds: Option<Vec<u64>>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 64,
            temperature: 0.5,
            epochs: 30,
            optimizer: AdamConfig::default(),
            ensemble_size: 5,
            seed: 0,
            member_seeds: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ContrastiveError> {
        if self.batch_size < 2 {
            return Err(ContrastiveError::Config(format!("batch_size {} must be >= 2", self.batch_size)));
        }
        if !(self.temperature > 0.0) {
            return Err(ContrastiveError::Config(format!("temperature {} must be > 0", self.temperature)));
        }
        if self.ensemble_size < 1 {
            return Err(ContrastiveError::Config("ensemble_size must be >= 1".into()));
        }
        let seeds = self.member_seeds();
        if seeds.len() != self.ensemble_size {
            return Err(ContrastiveError::Config(format!(
                "{} member seeds for an ensemble of {}",
                seeds.len(),
                self.ensemble_size
            )));
        }
        let mut sorted = seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != seeds.len() {
            return Err(ContrastiveError::Config("member seeds must be distinct".into()));
        }
        let o = &self.optimizer;
        if !(o.learning_rate > 0.0) || !(0.0..1.0).contains(&o.beta1) || !(0.0..1.0).contains(&o.beta2) || !(o.epsilon > 0.0) {
            return Err(ContrastiveError::Config("invalid optimizer hyperparameters".into()));
        }
        Ok(())
    }

    pub fn member_seeds(&self) -> Vec<u64> {
        match &self.member_seeds {
            Some(seeds) => seeds.clone(),
            None => (0..self.ensemble_size as u64).map(|k| derive_seed(self.seed, k)).collect(),
        }
    }
}

/// Weights and per-epoch mean loss of one trained encoder.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainedMember {
    pub weights: EncoderWeights<f32>,
    pub loss_curve: Vec<f64>,
}

/// Trains one encoder on a normalized dataset.
pub fn train_member(
    data: &TrainingSet,
    spec: &EncoderSpec,
    config: &TrainConfig,
    policy: &AugmentationPolicy,
    seed: u64,
) -> Result<TrainedMember, ContrastiveError> {
    policy.validate()?;
    if !(config.temperature > 0.0) || config.batch_size < 2 {
        return Err(ContrastiveError::Config("batch_size must be >= 2 and temperature > 0".into()));
    }
    if policy.family != data.shape_tag {
        return Err(ContrastiveError::Family { policy: policy.family, output: data.shape_tag });
    }
    if spec.input_shape != data.dims {
        return Err(ContrastiveError::Shape(format!(
            "encoder input {:?} does not match data {:?}",
            spec.input_shape, data.dims
        )));
    }
    if data.is_empty() {
        return Err(ContrastiveError::Dataset("empty dataset".into()));
    }

    let mut encoder = init_encoder::<f32>(spec, seed)?;
    let mut adam = AdamState::new(&encoder.weights, config.optimizer);
    let mut rng = rng_from_seed(derive_seed(seed, TRAIN_STREAM));
    let features = data.features();
    let dim = encoder.output_dim();
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut loss_curve = Vec::with_capacity(config.epochs);
    let mut batch = Vec::with_capacity(2 * config.batch_size * features);

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut steps = 0usize;
        for (step, chunk) in order.chunks(config.batch_size).enumerate() {
            let rows = 2 * chunk.len();
            batch.clear();
            batch.resize(rows * features, 0.0f32);
            for (k, &idx) in chunk.iter().enumerate() {
                let src = data.sample(idx);
                for view in 0..2 {
                    let r = 2 * k + view;
                    augment_into(src, &data.dims, policy, &mut rng, &mut batch[r * features..(r + 1) * features]);
                }
            }
            let (emb, cache) = encoder.forward(&batch, rows)?;
            let emb64: Vec<f64> = emb.iter().map(|&v| v as f64).collect();
            let (loss, grad) = ntxent_euclidean_with_grad(&emb64, dim, config.temperature)?;
            if !loss.is_finite() {
                return Err(ContrastiveError::Divergence { epoch, step, loss });
            }
            let grad32: Vec<f32> = grad.iter().map(|&g| g as f32).collect();
            let grads = encoder.backward(&cache, &grad32)?;
            adam_step(&mut encoder.weights, &grads, &mut adam)?;
            if !encoder.weights.is_finite() {
                return Err(ContrastiveError::Divergence { epoch, step, loss: f64::NAN });
            }
            epoch_loss += loss;
            steps += 1;
        }
        loss_curve.push(epoch_loss / steps as f64);
    }
    Ok(TrainedMember { weights: encoder.weights, loss_curve })
}

/// Independently trained encoders sharing one architecture and normalization.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleModel {
    pub spec: EncoderSpec,
    pub members: Vec<Encoder<f32>>,
    pub normalization: Normalization,
    pub loss_curves: Vec<Vec<f64>>,
    pub member_seeds: Vec<u64>,
}

impl EnsembleModel {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn output_dim(&self) -> usize {
        self.spec.output_dim
    }
}

/// Fits the normalization on `dataset` and trains every member, concurrently.
pub fn train_ensemble(
    dataset: &[SimulationOutput],
    spec: &EncoderSpec,
    config: &TrainConfig,
    policy: &AugmentationPolicy,
) -> Result<EnsembleModel, ContrastiveError> {
    config.validate()?;
    policy.validate()?;
    spec.validate()?;
    let normalization = normalize_fit(dataset)?;
    let data = TrainingSet::from_outputs(dataset, &normalization)?;
    let seeds = config.member_seeds();
    let results: Vec<Result<TrainedMember, ContrastiveError>> =
        seeds.par_iter().map(|&seed| train_member(&data, spec, config, policy, seed)).collect();
    // the lowest failing index is reported, whatever the scheduling
    let trained: Vec<TrainedMember> = results
        .into_iter()
        .enumerate()
        .map(|(index, r)| r.map_err(|e| ContrastiveError::Member { index, source: Box::new(e) }))
        .collect::<Result<_, _>>()?;
    let mut members = Vec::with_capacity(trained.len());
    let mut loss_curves = Vec::with_capacity(trained.len());
    for m in trained {
        members.push(Encoder::from_weights(spec, m.weights)?);
        loss_curves.push(m.loss_curve);
    }
    Ok(EnsembleModel { spec: spec.clone(), members, normalization, loss_curves, member_seeds: seeds })
}

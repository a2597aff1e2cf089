use serde::{Deserialize, Serialize};

use super::ContrastiveError;
use crate::simulators::{ShapeTag, SimulationOutput};

/// Smallest standard deviation used for scaling.
pub const STD_FLOOR: f64 = 1e-8;

/// Per-feature z-scoring statistics of a training set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Per-feature mean and population standard deviation, floored at [`STD_FLOOR`].
pub fn normalize_fit(dataset: &[SimulationOutput]) -> Result<Normalization, ContrastiveError> {
    if dataset.len() < 2 {
        return Err(ContrastiveError::Dataset(format!("need at least 2 samples, got {}", dataset.len())));
    }
    let first = &dataset[0];
    for (i, out) in dataset.iter().enumerate() {
        if out.dims != first.dims || out.shape_tag != first.shape_tag {
            return Err(ContrastiveError::Shape(format!(
                "sample {i} has shape {:?} {:?}, expected {:?} {:?}",
                out.shape_tag, out.dims, first.shape_tag, first.dims
            )));
        }
    }
    let n = dataset.len() as f64;
    let f = first.len();
    let mut mean = vec![0.0; f];
    for out in dataset {
        for (m, v) in mean.iter_mut().zip(&out.data) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; f];
    for out in dataset {
        for ((s, v), m) in var.iter_mut().zip(&out.data).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let std = var.into_iter().map(|s| (s / n).sqrt().max(STD_FLOOR)).collect();
    Ok(Normalization { mean, std })
}

impl Normalization {
    pub fn features(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, out: &SimulationOutput) -> Result<Vec<f64>, ContrastiveError> {
        if out.len() != self.features() {
            return Err(ContrastiveError::Shape(format!(
                "output has {} values, normalization expects {}",
                out.len(),
                self.features()
            )));
        }
        Ok(out.data.iter().zip(&self.mean).zip(&self.std).map(|((v, m), s)| (v - m) / s).collect())
    }

    pub fn apply_f32(&self, out: &SimulationOutput) -> Result<Vec<f32>, ContrastiveError> {
        Ok(self.apply(out)?.into_iter().map(|v| v as f32).collect())
    }
}

/// Normalized samples packed contiguously for training.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingSet {
    pub shape_tag: ShapeTag,
    pub dims: Vec<usize>,
    pub values: Vec<f32>,
    len: usize,
}

impl TrainingSet {
    pub fn from_outputs(outputs: &[SimulationOutput], norm: &Normalization) -> Result<Self, ContrastiveError> {
        let first = outputs.first().ok_or_else(|| ContrastiveError::Dataset("empty dataset".into()))?;
        let mut values = Vec::with_capacity(outputs.len() * first.len());
        for out in outputs {
            if out.dims != first.dims || out.shape_tag != first.shape_tag {
                return Err(ContrastiveError::Shape("inconsistent sample shapes".into()));
            }
            values.extend(norm.apply_f32(out)?);
        }
        Ok(Self { shape_tag: first.shape_tag, dims: first.dims.clone(), values, len: outputs.len() })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn features(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn sample(&self, i: usize) -> &[f32] {
        let f = self.features();
        &self.values[i * f..(i + 1) * f]
    }
}

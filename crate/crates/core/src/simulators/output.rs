use serde::{Deserialize, Serialize};

use super::SimError;

/// Layout of a model output.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeTag {
    /// `[features]`
    Vector,
    /// `[timepoints, species]`
    Timeseries,
    /// `[height, width, channels]`
    Grid,
}

impl ShapeTag {
    pub fn rank(self) -> usize {
        match self {
            ShapeTag::Vector => 1,
            ShapeTag::Timeseries => 2,
            ShapeTag::Grid => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ShapeTag::Vector => "vector",
            ShapeTag::Timeseries => "timeseries",
            ShapeTag::Grid => "grid",
        }
    }
}

/// Parameters and seed that produced an output.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OutputMeta {
    pub params: Vec<f64>,
    pub seed: u64,
}

/// One model run, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SimulationOutput {
    pub shape_tag: ShapeTag,
    pub dims: Vec<usize>,
    pub data: Vec<f64>,
    pub meta: OutputMeta,
}

impl SimulationOutput {
    pub fn new(shape_tag: ShapeTag, dims: Vec<usize>, data: Vec<f64>, meta: OutputMeta) -> Result<Self, SimError> {
        let out = Self { shape_tag, dims, data, meta };
        out.validate()?;
        Ok(out)
    }

    pub fn vector(data: Vec<f64>) -> Self {
        Self { shape_tag: ShapeTag::Vector, dims: vec![data.len()], data, meta: OutputMeta::default() }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.dims.len() != self.shape_tag.rank() {
            return Err(SimError::Shape(format!(
                "{} output needs {} dims, got {:?}",
                self.shape_tag.as_str(),
                self.shape_tag.rank(),
                self.dims
            )));
        }
        let n: usize = self.dims.iter().product();
        if n != self.data.len() {
            return Err(SimError::Shape(format!("dims {:?} hold {n} values, data has {}", self.dims, self.data.len())));
        }
        if let Some(i) = self.data.iter().position(|v| !v.is_finite()) {
            return Err(SimError::NonFinite(format!("output value {i} is not finite")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn with_meta(mut self, params: Vec<f64>, seed: u64) -> Self {
        self.meta = OutputMeta { params, seed };
        self
    }

    /// Last row of a timeseries (the final value of every species).
    pub fn final_row(&self) -> Option<&[f64]> {
        match self.shape_tag {
            ShapeTag::Timeseries => {
                let width = self.dims[1];
                Some(&self.data[self.data.len() - width..])
            }
            _ => None,
        }
    }

    /// Sum of each channel of a grid (occupancy counts for one-hot grids).
    pub fn channel_totals(&self) -> Option<Vec<f64>> {
        match self.shape_tag {
            ShapeTag::Grid => {
                let c = self.dims[2];
                let mut totals = vec![0.0; c];
                for cell in self.data.chunks_exact(c) {
                    for (t, v) in totals.iter_mut().zip(cell) {
                        *t += v;
                    }
                }
                Some(totals)
            }
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validate_checks_dims() {
        let ok = SimulationOutput::new(ShapeTag::Timeseries, vec![2, 2], vec![1.0, 2.0, 3.0, 4.0], OutputMeta::default());
        assert_eq!(ok.unwrap().final_row().unwrap(), &[3.0, 4.0]);
        assert!(SimulationOutput::new(ShapeTag::Grid, vec![2, 2], vec![0.0; 4], OutputMeta::default()).is_err());
        assert!(SimulationOutput::new(ShapeTag::Vector, vec![3], vec![0.0; 4], OutputMeta::default()).is_err());
        assert!(SimulationOutput::new(ShapeTag::Vector, vec![1], vec![f64::NAN], OutputMeta::default()).is_err());
    }

    #[test]
    fn channel_totals_count_one_hot_cells() {
        let grid = SimulationOutput::new(
            ShapeTag::Grid,
            vec![1, 3, 2],
            vec![1.0, 0.0, 0.0, 1.0, 1.0, 0.0],
            OutputMeta::default(),
        )
        .unwrap();
        assert_eq!(grid.channel_totals().unwrap(), vec![2.0, 1.0]);
    }
}

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{OutputMeta, ShapeTag, SimError, SimulationOutput};
use crate::rng::rng_from_seed;

/// Synthetic 2-D layouts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TestDataKind {
    /// Three Gaussian blobs.
    A,
    /// Two concentric noisy rings.
    B,
}

/// `(x+y, x-y, xy, x^2, y^2, x^2 y, x y^2, x^3, y^3)`.
pub fn transform9(x: f64, y: f64) -> [f64; 9] {
    [x + y, x - y, x * y, x * x, y * y, x * x * y, x * y * y, x * x * x, y * y * y]
}

#[derive(Clone, Debug, PartialEq)]
pub struct TestData {
    pub points: Vec<[f64; 2]>,
    /// Blob or ring index of every point.
    pub labels: Vec<usize>,
    /// Nine-dimensional transforms of `points`, with `(x, y)` as parameters.
    pub outputs: Vec<SimulationOutput>,
}

const BLOB_CENTERS: [[f64; 2]; 3] = [[-2.0, -1.0], [2.0, -1.0], [0.0, 2.0]];
const BLOB_SIGMA: f64 = 0.5;
const RING_RADII: [f64; 2] = [1.0, 2.0];
const RING_NOISE: f64 = 0.08;

pub fn gen_testdata(kind: TestDataKind, n: usize, seed: u64) -> Result<TestData, SimError> {
    if n < 10 {
        return Err(SimError::Params(format!("test data needs n >= 10, got {n}")));
    }
    let mut rng = rng_from_seed(seed);
    let mut points = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let (p, label) = match kind {
            TestDataKind::A => {
                let c = BLOB_CENTERS[i % 3];
                let dx: f64 = rng.sample(StandardNormal);
                let dy: f64 = rng.sample(StandardNormal);
                ([c[0] + BLOB_SIGMA * dx, c[1] + BLOB_SIGMA * dy], i % 3)
            }
            TestDataKind::B => {
                let r0 = RING_RADII[i % 2];
                let theta = rng.random::<f64>() * std::f64::consts::TAU;
                let dr: f64 = rng.sample(StandardNormal);
                let r = r0 + RING_NOISE * dr;
                ([r * theta.cos(), r * theta.sin()], i % 2)
            }
        };
        points.push(p);
        labels.push(label);
    }
    let outputs = points
        .iter()
        .map(|&[x, y]| SimulationOutput {
            shape_tag: ShapeTag::Vector,
            dims: vec![9],
            data: transform9(x, y).to_vec(),
            meta: OutputMeta { params: vec![x, y], seed },
        })
        .collect();
    Ok(TestData { points, labels, outputs })
}

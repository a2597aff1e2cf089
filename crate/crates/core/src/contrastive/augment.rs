use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::ContrastiveError;
use crate::nn::Real;
use crate::rng::{rng_from_seed, SimRng};
use crate::simulators::{ShapeTag, SimulationOutput};

/// Perturbations that produce the two views of each sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AugmentationPolicy {
    pub family: ShapeTag,
    /// Standard deviation of additive noise, in units of the per-feature std
    /// (the data is z-scored before augmentation).
    pub noise_sigma: f64,
    /// Fraction of features (vector), of the time span (timeseries) or of
    /// sites (grid) set to zero.
    pub mask_fraction: f64,
    /// Apply a random rotation/reflection to grids.
    pub grid_symmetry: bool,
}

impl AugmentationPolicy {
    pub fn default_for(family: ShapeTag) -> Self {
        match family {
            ShapeTag::Vector | ShapeTag::Timeseries => {
                Self { family, noise_sigma: 0.05, mask_fraction: 0.10, grid_symmetry: false }
            }
            ShapeTag::Grid => Self { family, noise_sigma: 0.05, mask_fraction: 0.0, grid_symmetry: true },
        }
    }

    pub fn identity(family: ShapeTag) -> Self {
        Self { family, noise_sigma: 0.0, mask_fraction: 0.0, grid_symmetry: false }
    }

    pub fn validate(&self) -> Result<(), ContrastiveError> {
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return Err(ContrastiveError::Config(format!("noise_sigma {} must be >= 0", self.noise_sigma)));
        }
        if !(0.0..=0.5).contains(&self.mask_fraction) {
            return Err(ContrastiveError::Config(format!("mask_fraction {} outside [0, 0.5]", self.mask_fraction)));
        }
        Ok(())
    }
}

/// Augmented copy of `out`, deterministic in `(out, policy, seed)`.
pub fn augment(out: &SimulationOutput, policy: &AugmentationPolicy, seed: u64) -> Result<SimulationOutput, ContrastiveError> {
    policy.validate()?;
    if out.shape_tag != policy.family {
        return Err(ContrastiveError::Family { policy: policy.family, output: out.shape_tag });
    }
    let mut rng = rng_from_seed(seed);
    let mut data = vec![0.0; out.len()];
    augment_into(&out.data, &out.dims, policy, &mut rng, &mut data);
    Ok(SimulationOutput { data, ..out.clone() })
}

/// Writes an augmented view of `src` (shape `dims`) into `dst`.
pub(crate) fn augment_into<T: Real>(
    src: &[T],
    dims: &[usize],
    policy: &AugmentationPolicy,
    rng: &mut SimRng,
    dst: &mut [T],
) {
    match policy.family {
        ShapeTag::Grid if policy.grid_symmetry => {
            let k = rng.random_range(0..8u32);
            dihedral(src, dims[0], dims[1], dims[2], k, dst);
        }
        _ => dst.copy_from_slice(src),
    }

    if policy.noise_sigma > 0.0 {
        for v in dst.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *v += T::of(z * policy.noise_sigma);
        }
    }

    if policy.mask_fraction > 0.0 {
        match policy.family {
            ShapeTag::Vector => {
                let k = (policy.mask_fraction * dst.len() as f64).round() as usize;
                for i in sample(rng, dst.len(), k.min(dst.len())) {
                    dst[i] = T::zero();
                }
            }
            ShapeTag::Timeseries => {
                let (len, channels) = (dims[0], dims[1]);
                let window = ((policy.mask_fraction * len as f64).round() as usize).min(len);
                if window > 0 {
                    for c in 0..channels {
                        let start = rng.random_range(0..=len - window);
                        for t in start..start + window {
                            dst[t * channels + c] = T::zero();
                        }
                    }
                }
            }
            ShapeTag::Grid => {
                let (sites, channels) = (dims[0] * dims[1], dims[2]);
                let k = (policy.mask_fraction * sites as f64).round() as usize;
                for s in sample(rng, sites, k.min(sites)) {
                    dst[s * channels..(s + 1) * channels].iter_mut().for_each(|v| *v = T::zero());
                }
            }
        }
    }
}

/// Source cell of output cell `(i, j)` under symmetry `k` of an `h x w` grid.
///
/// Square grids use all eight rotations/reflections. Other grids use the four
/// symmetries that preserve the shape (`k % 4`).
pub(crate) fn dihedral_source(k: u32, i: usize, j: usize, h: usize, w: usize) -> (usize, usize) {
    if h == w {
        let n = h;
        let jj = if k >= 4 { n - 1 - j } else { j };
        match k % 4 {
            0 => (i, jj),
            1 => (n - 1 - jj, i),
            2 => (n - 1 - i, n - 1 - jj),
            _ => (jj, n - 1 - i),
        }
    } else {
        match k % 4 {
            0 => (i, j),
            1 => (h - 1 - i, j),
            2 => (i, w - 1 - j),
            _ => (h - 1 - i, w - 1 - j),
        }
    }
}

fn dihedral<T: Real>(src: &[T], h: usize, w: usize, c: usize, k: u32, dst: &mut [T]) {
    for i in 0..h {
        for j in 0..w {
            let (si, sj) = dihedral_source(k, i, j, h, w);
            let from = (si * w + sj) * c;
            let to = (i * w + j) * c;
            dst[to..to + c].copy_from_slice(&src[from..from + c]);
        }
    }
}

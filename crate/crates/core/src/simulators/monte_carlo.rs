use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ModelFamily, SimError, SimulationOutput};
use crate::rng::{derive_seed, rng_from_seed, SimRng};

/// Independent uniform sampling box, one interval per named parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamRanges {
    pub names: Vec<String>,
    pub low: Vec<f64>,
    pub high: Vec<f64>,
}

impl ParamRanges {
    pub fn new(names: Vec<String>, low: Vec<f64>, high: Vec<f64>) -> Result<Self, SimError> {
        let r = Self { names, low, high };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.low.len() != self.names.len() || self.high.len() != self.names.len() {
            return Err(SimError::Params(format!(
                "{} names, {} lows, {} highs",
                self.names.len(),
                self.low.len(),
                self.high.len()
            )));
        }
        for ((name, lo), hi) in self.names.iter().zip(&self.low).zip(&self.high) {
            if !lo.is_finite() || !hi.is_finite() || lo > hi {
                return Err(SimError::Params(format!("range for {name} is [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn sample(&self, rng: &mut SimRng) -> Vec<f64> {
        self.low
            .iter()
            .zip(&self.high)
            .map(|(&lo, &hi)| {
                let u: f64 = rng.random();
                if lo == hi {
                    lo
                } else {
                    (lo + (hi - lo) * u).clamp(lo, hi)
                }
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleFailure {
    pub sample: usize,
    pub replicate: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MonteCarloRun {
    pub param_names: Vec<String>,
    /// Successful runs, ordered by sample then replicate.
    pub outputs: Vec<SimulationOutput>,
    pub failures: Vec<SampleFailure>,
}

/// Seed of replicate `r` of sample `i`.
pub fn replicate_seed(seed: u64, sample: usize, replicate: usize) -> u64 {
    derive_seed(derive_seed(seed, sample as u64), replicate as u64 + 1)
}

/// Samples `n` parameter vectors and simulates each. Stochastic families run
/// `replicates` seeds per vector, each kept as its own output; deterministic
/// families run once. Failed runs are reported, not fatal.
pub fn monte_carlo(
    family: &ModelFamily,
    ranges: &ParamRanges,
    n: usize,
    seed: u64,
    replicates: usize,
) -> Result<MonteCarloRun, SimError> {
    if n == 0 {
        return Err(SimError::Params("sample count must be at least 1".into()));
    }
    if replicates == 0 {
        return Err(SimError::Params("replicates must be at least 1".into()));
    }
    ranges.validate()?;
    let names = family.param_names();
    if ranges.names != names {
        return Err(SimError::Params(format!("ranges cover {:?}, family expects {:?}", ranges.names, names)));
    }
    let reps = if family.is_stochastic() { replicates } else { 1 };
    let results: Vec<Vec<Result<SimulationOutput, SampleFailure>>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let params = ranges.sample(&mut rng_from_seed(derive_seed(seed, i as u64)));
            (0..reps)
                .map(|r| {
                    family.simulate(&params, replicate_seed(seed, i, r)).map_err(|e| SampleFailure {
                        sample: i,
                        replicate: r,
                        message: e.to_string(),
                    })
                })
                .collect()
        })
        .collect();
    let mut outputs = Vec::with_capacity(n * reps);
    let mut failures = Vec::new();
    for r in results.into_iter().flatten() {
        match r {
            Ok(o) => outputs.push(o),
            Err(f) => failures.push(f),
        }
    }
    Ok(MonteCarloRun { param_names: names, outputs, failures })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulators::LvSettings;

    fn small_lv() -> ModelFamily {
        ModelFamily::Lv(LvSettings { t_end: 5.0, dt: 0.05, n_out: 5, ..Default::default() })
    }

    #[test]
    fn degenerate_ranges_repeat_one_vector() {
        let fam = small_lv();
        let base = fam.base_params().unwrap();
        let ranges = ParamRanges::new(fam.param_names(), base.clone(), base.clone()).unwrap();
        let run = monte_carlo(&fam, &ranges, 4, 1, 1).unwrap();
        assert_eq!(run.outputs.len(), 4);
        assert!(run.outputs.iter().all(|o| o.meta.params == base));
    }

    #[test]
    fn samples_stay_in_range_and_are_reproducible() {
        let fam = small_lv();
        let ranges = fam.default_ranges().unwrap();
        let run = monte_carlo(&fam, &ranges, 20, 7, 3).unwrap();
        assert_eq!(run.outputs.len(), 20);
        for o in &run.outputs {
            for ((v, lo), hi) in o.meta.params.iter().zip(&ranges.low).zip(&ranges.high) {
                assert!(lo <= v && v <= hi);
            }
        }
        assert_eq!(run, monte_carlo(&fam, &ranges, 20, 7, 3).unwrap());
    }

    #[test]
    fn stochastic_replicates_are_separate_outputs() {
        let fam = ModelFamily::Abm { side: 8, steps: 3 };
        let run = monte_carlo(&fam, &fam.default_ranges().unwrap(), 3, 2, 4).unwrap();
        assert_eq!(run.outputs.len(), 12);
        assert_eq!(run.outputs[0].meta.params, run.outputs[3].meta.params);
        assert_ne!(run.outputs[0].meta.seed, run.outputs[1].meta.seed);
    }

    #[test]
    fn failures_are_recorded() {
        let fam = ModelFamily::toy_fba();
        let mut ranges = fam.default_ranges().unwrap();
        // no carbon at all while maintenance stays positive
        (ranges.low[0], ranges.high[0]) = (0.0, 0.0);
        (ranges.low[1], ranges.high[1]) = (0.0, 0.0);
        let run = monte_carlo(&fam, &ranges, 3, 0, 1).unwrap();
        assert!(run.outputs.is_empty());
        assert_eq!(run.failures.len(), 3);
    }

    #[test]
    fn uniform_means() {
        let ranges = ParamRanges::new(vec!["a".into(), "b".into()], vec![0.0, -2.0], vec![1.0, 6.0]).unwrap();
        let n = 10_000;
        let mut sums = [0.0; 2];
        for i in 0..n {
            let v = ranges.sample(&mut rng_from_seed(derive_seed(5, i)));
            sums[0] += v[0];
            sums[1] += v[1];
        }
        for k in 0..2 {
            let width = ranges.high[k] - ranges.low[k];
            let se = width / 12f64.sqrt() / (n as f64).sqrt();
            let mid = (ranges.low[k] + ranges.high[k]) / 2.0;
            assert!((sums[k] / n as f64 - mid).abs() < 3.0 * se);
        }
    }

    #[test]
    fn invalid_requests() {
        let fam = small_lv();
        let ranges = fam.default_ranges().unwrap();
        assert!(monte_carlo(&fam, &ranges, 0, 0, 1).is_err());
        let other = ModelFamily::Abm { side: 8, steps: 1 }.default_ranges().unwrap();
        assert!(monte_carlo(&fam, &other, 1, 0, 1).is_err());
        assert!(ParamRanges::new(vec!["a".into()], vec![1.0], vec![0.0]).is_err());
    }
}

use serde::{Deserialize, Serialize};

use super::abm::{abm_simulate, AbmParams, AbmRates};
use super::fba::{fba_solve, FluxNetwork};
use super::lv::{lv_simulate, LvParams, LvSettings};
use super::monte_carlo::ParamRanges;
use super::{ShapeTag, SimError, SimulationOutput};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    Lv,
    Fba,
    Abm,
}

impl FamilyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FamilyKind::Lv => "lv",
            FamilyKind::Fba => "fba",
            FamilyKind::Abm => "abm",
        }
    }
}

/// A simulator together with the settings that are not sampled.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelFamily {
    /// Parameters: `r1..r4`, then `a11..a44`.
    Lv(LvSettings),
    /// Parameters: named flux bounds such as `lb:EX_glc`.
    Fba { network: FluxNetwork, params: Vec<String> },
    /// Parameters: the six event rates.
    Abm { side: usize, steps: usize },
}

/// Uptake and maintenance bounds varied by default on the bundled network.
pub const DEFAULT_FBA_PARAMS: [&str; 7] =
    ["lb:EX_glc", "lb:EX_udpg", "lb:EX_o2", "lb:ATPM", "ub:PGI", "ub:PDH", "ub:ETC"];

impl ModelFamily {
    pub fn toy_fba() -> Self {
        ModelFamily::Fba {
            network: FluxNetwork::toy(),
            params: DEFAULT_FBA_PARAMS.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn kind(&self) -> FamilyKind {
        match self {
            ModelFamily::Lv(_) => FamilyKind::Lv,
            ModelFamily::Fba { .. } => FamilyKind::Fba,
            ModelFamily::Abm { .. } => FamilyKind::Abm,
        }
    }

    pub fn is_stochastic(&self) -> bool {
        matches!(self, ModelFamily::Abm { .. })
    }

    pub fn param_names(&self) -> Vec<String> {
        match self {
            ModelFamily::Lv(_) => LvParams::param_names(),
            ModelFamily::Fba { params, .. } => params.clone(),
            ModelFamily::Abm { .. } => AbmRates::NAMES.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn base_params(&self) -> Result<Vec<f64>, SimError> {
        match self {
            ModelFamily::Lv(_) => Ok(LvParams::chaotic_base().to_vector()),
            ModelFamily::Fba { network, params } => params
                .iter()
                .map(|name| {
                    network.bound_param(name).ok_or_else(|| SimError::Params(format!("unknown flux bound {name}")))
                })
                .collect(),
            ModelFamily::Abm { .. } => Ok(AbmRates::default().to_vector()),
        }
    }

    /// Sampling box used when a run does not give one.
    ///
    /// LV: every parameter over `[0.5, 2]` times its base value. FBA: uptake
    /// lower bounds over `[2 * base, 0]`, upper bounds over `[0, base]`, other
    /// lower bounds over `[0.5, 1.5]` times base. ABM: proliferation
    /// `[0.05, 0.6]`, death `[0, 0.1]`, the rest `[0, 1]`.
    pub fn default_ranges(&self) -> Result<ParamRanges, SimError> {
        let names = self.param_names();
        let base = self.base_params()?;
        let (low, high): (Vec<f64>, Vec<f64>) = match self {
            ModelFamily::Lv(_) => base.iter().map(|b| (0.5 * b, 2.0 * b)).unzip(),
            ModelFamily::Fba { .. } => names
                .iter()
                .zip(&base)
                .map(|(name, &b)| {
                    if b < 0.0 {
                        (2.0 * b, 0.0)
                    } else if name.starts_with("ub:") {
                        (0.0, b)
                    } else {
                        (0.5 * b, 1.5 * b)
                    }
                })
                .unzip(),
            ModelFamily::Abm { .. } => {
                let mut low = vec![0.0; 6];
                let mut high = vec![1.0; 6];
                (low[0], high[0]) = (0.05, 0.6);
                high[1] = 0.1;
                (low, high)
            }
        };
        ParamRanges::new(names, low, high)
    }

    pub fn output_layout(&self) -> (ShapeTag, Vec<usize>) {
        match self {
            ModelFamily::Lv(s) => (ShapeTag::Timeseries, vec![s.n_out, 4]),
            ModelFamily::Fba { network, .. } => (ShapeTag::Vector, vec![network.len()]),
            ModelFamily::Abm { side, .. } => (ShapeTag::Grid, vec![*side, *side, 3]),
        }
    }

    /// Network with the bound parameters applied.
    pub fn network_with(&self, params: &[f64]) -> Result<FluxNetwork, SimError> {
        let ModelFamily::Fba { network, params: names } = self else {
            return Err(SimError::Params("not a flux family".into()));
        };
        if params.len() != names.len() {
            return Err(SimError::Params(format!("expected {} parameters, got {}", names.len(), params.len())));
        }
        let mut net = network.clone();
        for (name, &v) in names.iter().zip(params) {
            net.set_bound_param(name, v)?;
        }
        Ok(net)
    }

    /// Runs one simulation. `seed` only matters for stochastic families but
    /// is always recorded.
    pub fn simulate(&self, params: &[f64], seed: u64) -> Result<SimulationOutput, SimError> {
        let out = match self {
            ModelFamily::Lv(s) => {
                let p = LvParams::from_vector(params, s.x0)?;
                lv_simulate(&p, s.t_end, s.dt, s.n_out)?
            }
            ModelFamily::Fba { .. } => fba_solve(&self.network_with(params)?)?.to_output(params.to_vec(), seed),
            ModelFamily::Abm { side, steps } => {
                let p = AbmParams { side: *side, steps: *steps, rates: AbmRates::from_vector(params)? };
                abm_simulate(&p, seed)?
            }
        };
        Ok(out.with_meta(params.to_vec(), seed))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn families_report_consistent_layouts() {
        let fams = [
            ModelFamily::Lv(LvSettings { t_end: 20.0, dt: 0.05, n_out: 10, ..Default::default() }),
            ModelFamily::toy_fba(),
            ModelFamily::Abm { side: 10, steps: 5 },
        ];
        for fam in &fams {
            let base = fam.base_params().unwrap();
            assert_eq!(base.len(), fam.param_names().len());
            let out = fam.simulate(&base, 3).unwrap();
            let (tag, dims) = fam.output_layout();
            assert_eq!(out.shape_tag, tag);
            assert_eq!(out.dims, dims);
            assert_eq!(out.meta.params, base);
            let ranges = fam.default_ranges().unwrap();
            for ((b, lo), hi) in base.iter().zip(&ranges.low).zip(&ranges.high) {
                assert!(lo <= b && b <= hi, "{b} outside [{lo}, {hi}]");
            }
        }
    }

    #[test]
    fn fba_params_apply_to_the_network() {
        let fam = ModelFamily::toy_fba();
        let net = fam.network_with(&[-3.0, -1.0, -2.0, 5.0, 7.0, 8.0, 9.0]).unwrap();
        assert_eq!(net.bound_param("lb:EX_glc"), Some(-3.0));
        assert_eq!(net.bound_param("lb:ATPM"), Some(5.0));
        assert_eq!(net.bound_param("ub:ETC"), Some(9.0));
        let ranges = fam.default_ranges().unwrap();
        assert_eq!((ranges.low[4], ranges.high[4]), (0.0, 30.0));
        assert!(fam.network_with(&[1.0]).is_err());
    }
}

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::IoError;
use crate::analysis::{Linkage, OutputSummary};
use crate::contrastive::{default_encoder, AugmentationPolicy, TrainConfig};
use crate::nn::EncoderSpec;
use crate::rng::derive_seed;
use crate::simulators::{
    FamilyKind, FluxNetwork, LvSettings, ModelFamily, ParamRanges, ShapeTag, TestDataKind, DEFAULT_FBA_PARAMS,
};

/// Which simulator produces the dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilyConfig {
    Lv(LvSettings),
    Fba {
        /// Network JSON; the bundled toy network when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        network: Option<PathBuf>,
        /// Bound parameters such as `lb:EX_glc`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        params: Option<Vec<String>>,
    },
    Abm {
        side: usize,
        steps: usize,
    },
    /// Points from a synthetic 2-D layout, lifted to nine features.
    Testdata { layout: TestDataKind },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRequest {
    /// Parameter name, as listed by the family.
    pub param: String,
    #[serde(default = "default_sweep_count")]
    pub count: usize,
    /// Values run from `base / factor` to `base * factor`.
    #[serde(default = "default_sweep_factor")]
    pub factor: f64,
}

fn default_sweep_count() -> usize {
    21
}

fn default_sweep_factor() -> f64 {
    2.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluxSweepRequest {
    pub reaction: String,
    #[serde(default = "default_sweep_count")]
    pub count: usize,
    /// Magnitude of the most negative bound.
    #[serde(default = "default_largest")]
    pub largest: f64,
}

fn default_largest() -> f64 {
    1000.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensitivityRequest {
    #[serde(default = "default_delta")]
    pub delta: f64,
    pub specified: OutputSummary,
    #[serde(default)]
    pub relative: bool,
}

fn default_delta() -> f64 {
    0.1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterRequest {
    pub k: usize,
    #[serde(default)]
    pub linkage: Linkage,
    #[serde(default = "default_bins")]
    pub bins: usize,
    /// Outputs described alongside the parameters.
    #[serde(default = "default_describe")]
    pub describe: OutputSummary,
}

fn default_bins() -> usize {
    10
}

fn default_describe() -> OutputSummary {
    OutputSummary::ChannelTotals
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub consensus_n: Vec<usize>,
    /// Score consensus on a freshly drawn set of the same size instead of the
    /// training outputs.
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub consensus_held_out: bool,
    /// Base parameter vector; the family's own when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepRequest>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flux_sweep: Option<FluxSweepRequest>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sensitivity: Option<SensitivityRequest>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cluster: Option<ClusterRequest>,
}

/// Everything a run needs. The single `seed` drives every random stream.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub family: FamilyConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ranges: Option<ParamRanges>,
    pub samples: usize,
    #[serde(default = "one")]
    pub replicates: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub encoder: Option<EncoderSpec>,
    #[serde(default = "default_output_dim")]
    pub output_dim: usize,
    /// Its `seed` field is replaced by one derived from the run seed.
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub augmentation: Option<AugmentationPolicy>,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

fn one() -> usize {
    1
}

fn default_output_dim() -> usize {
    16
}

const TRAIN_STREAM: u64 = 1;
const ANALYSIS_STREAM: u64 = 2;
const HELD_OUT_STREAM: u64 = 3;

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, IoError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| IoError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, IoError> {
        let text = std::fs::read_to_string(path).map_err(|e| IoError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        // Relative network paths are read from the config's directory.
        if let FamilyConfig::Fba { network: Some(p), .. } = &mut cfg.family {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the canonical JSON with the output directory removed.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out_dir = None;
        hex::encode(Sha256::digest(serde_json::to_vec(&c).expect("config serializes")))
    }

    /// Hash of the settings that determine the dataset.
    pub fn data_hash(&self) -> String {
        let key = serde_json::json!({
            "family": self.family,
            "ranges": self.ranges,
            "samples": self.samples,
            "replicates": self.replicates,
            "seed": self.seed,
        });
        hex::encode(Sha256::digest(serde_json::to_vec(&key).expect("config serializes")))
    }

    /// Hash of the settings that determine the trained model.
    pub fn model_hash(&self) -> String {
        let key = serde_json::json!({
            "data": self.data_hash(),
            "encoder": self.encoder,
            "output_dim": self.output_dim,
            "train": self.train,
            "augmentation": self.augmentation,
        });
        hex::encode(Sha256::digest(serde_json::to_vec(&key).expect("config serializes")))
    }

    pub fn train_seed(&self) -> u64 {
        derive_seed(self.seed, TRAIN_STREAM)
    }

    pub fn analysis_seed(&self) -> u64 {
        derive_seed(self.seed, ANALYSIS_STREAM)
    }

    pub fn held_out_seed(&self) -> u64 {
        derive_seed(self.seed, HELD_OUT_STREAM)
    }

    /// Training settings with the derived seed in place.
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig { seed: self.train_seed(), ..self.train.clone() }
    }

    pub fn model_family(&self) -> Result<Option<ModelFamily>, IoError> {
        Ok(match &self.family {
            FamilyConfig::Lv(s) => Some(ModelFamily::Lv(s.clone())),
            FamilyConfig::Fba { network, params } => {
                let network = match network {
                    Some(p) => FluxNetwork::load(p).map_err(|e| IoError::Config(e.to_string()))?,
                    None => FluxNetwork::toy(),
                };
                let params = params.clone().unwrap_or_else(|| DEFAULT_FBA_PARAMS.iter().map(|s| s.to_string()).collect());
                Some(ModelFamily::Fba { network, params })
            }
            FamilyConfig::Abm { side, steps } => Some(ModelFamily::Abm { side: *side, steps: *steps }),
            FamilyConfig::Testdata { .. } => None,
        })
    }

    pub fn family_kind(&self) -> Option<FamilyKind> {
        match self.family {
            FamilyConfig::Lv(_) => Some(FamilyKind::Lv),
            FamilyConfig::Fba { .. } => Some(FamilyKind::Fba),
            FamilyConfig::Abm { .. } => Some(FamilyKind::Abm),
            FamilyConfig::Testdata { .. } => None,
        }
    }

    pub fn output_layout(&self) -> Result<(ShapeTag, Vec<usize>), IoError> {
        Ok(match self.model_family()? {
            Some(f) => f.output_layout(),
            None => (ShapeTag::Vector, vec![9]),
        })
    }

    pub fn encoder_spec(&self) -> Result<EncoderSpec, IoError> {
        let (tag, dims) = self.output_layout()?;
        Ok(self.encoder.clone().unwrap_or_else(|| default_encoder(tag, &dims, self.output_dim)))
    }

    pub fn augmentation_policy(&self) -> Result<AugmentationPolicy, IoError> {
        let (tag, _) = self.output_layout()?;
        Ok(self.augmentation.unwrap_or_else(|| AugmentationPolicy::default_for(tag)))
    }

    pub fn param_ranges(&self) -> Result<Option<ParamRanges>, IoError> {
        match (&self.ranges, self.model_family()?) {
            (Some(r), _) => Ok(Some(r.clone())),
            (None, Some(f)) => Ok(Some(f.default_ranges().map_err(|e| IoError::Config(e.to_string()))?)),
            (None, None) => Ok(None),
        }
    }

    pub fn base_params(&self) -> Result<Vec<f64>, IoError> {
        match (&self.analysis.base, self.model_family()?) {
            (Some(b), _) => Ok(b.clone()),
            (None, Some(f)) => f.base_params().map_err(|e| IoError::Config(e.to_string())),
            (None, None) => Err(IoError::Config("test data has no parameters".into())),
        }
    }

    /// Checks everything that can be checked without simulating.
    pub fn validate(&self) -> Result<(), IoError> {
        let bad = |m: String| Err(IoError::Config(m));
        if self.samples == 0 {
            return bad("samples must be at least 1".into());
        }
        if self.replicates == 0 {
            return bad("replicates must be at least 1".into());
        }
        match &self.family {
            FamilyConfig::Abm { side, .. } if *side < crate::simulators::abm::MIN_SIDE => {
                return bad(format!("lattice side {side} is below {}", crate::simulators::abm::MIN_SIDE));
            }
            FamilyConfig::Testdata { .. } if self.samples < 10 => {
                return bad("test data needs at least 10 samples".into());
            }
            FamilyConfig::Lv(s) if !(s.t_end > 0.0 && s.dt > 0.0 && s.n_out >= 2) => {
                return bad("lv settings need t_end > 0, dt > 0, n_out >= 2".into());
            }
            _ => {}
        }
        let family = self.model_family()?;
        if let (Some(r), Some(f)) = (&self.ranges, &family) {
            r.validate().map_err(|e| IoError::Config(e.to_string()))?;
            if r.names != f.param_names() {
                return bad(format!("ranges cover {:?}, family expects {:?}", r.names, f.param_names()));
            }
        }
        let spec = self.encoder_spec()?;
        spec.validate().map_err(|e| IoError::Config(e.to_string()))?;
        let (tag, dims) = self.output_layout()?;
        if spec.input_shape != dims {
            return bad(format!("encoder input {:?} does not match outputs {:?}", spec.input_shape, dims));
        }
        self.train_config().validate().map_err(|e| IoError::Config(e.to_string()))?;
        let policy = self.augmentation_policy()?;
        policy.validate().map_err(|e| IoError::Config(e.to_string()))?;
        if policy.family != tag {
            return bad(format!("augmentation for {:?} outputs, family produces {:?}", policy.family, tag));
        }
        let a = &self.analysis;
        if a.consensus_n.contains(&0) {
            return bad("consensus sizes must be positive".into());
        }
        if let Some(f) = &family {
            let names = f.param_names();
            if let Some(b) = &a.base {
                if b.len() != names.len() {
                    return bad(format!("{} base values for {} parameters", b.len(), names.len()));
                }
            }
            if let Some(s) = &a.sweep {
                if !names.contains(&s.param) {
                    return bad(format!("unknown sweep parameter {:?}", s.param));
                }
                if s.count < 3 || s.count % 2 == 0 || !(s.factor > 1.0) {
                    return bad("sweep needs an odd count >= 3 and factor > 1".into());
                }
                if f.is_stochastic() && self.replicates < 2 {
                    return bad("stochastic sweeps need at least 2 replicates".into());
                }
            }
        }
        if let Some(fs) = &a.flux_sweep {
            let Some(ModelFamily::Fba { network, .. }) = &family else {
                return bad("flux_sweep needs the fba family".into());
            };
            if network.reaction_index(&fs.reaction).is_none() {
                return bad(format!("unknown reaction {:?}", fs.reaction));
            }
            if fs.count < 2 || !(fs.largest > 0.0) {
                return bad("flux_sweep needs count >= 2 and largest > 0".into());
            }
        }
        if let Some(s) = &a.sensitivity {
            if !s.delta.is_finite() {
                return bad("sensitivity delta must be finite".into());
            }
        }
        if let Some(c) = &a.cluster {
            if c.k == 0 || c.bins == 0 {
                return bad("cluster needs k >= 1 and bins >= 1".into());
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"family": {"kind": "lv", "n_out": 50}, "samples": 20, "seed": 3}"#;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = RunConfig::from_json(MINIMAL).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.replicates, 1);
        assert_eq!(cfg.encoder_spec().unwrap().input_shape, vec![50, 4]);
        assert_eq!(cfg.train_config().seed, derive_seed(3, 1));
        let again = RunConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(again.hash(), cfg.hash());
    }

    #[test]
    fn seed_is_required_and_unknown_fields_rejected() {
        assert!(RunConfig::from_json(r#"{"family": {"kind": "lv"}, "samples": 20}"#).is_err());
        assert!(RunConfig::from_json(r#"{"family": {"kind": "lv"}, "samples": 2, "seed": 1, "sead": 2}"#).is_err());
    }

    #[test]
    fn hash_ignores_out_dir_only() {
        let a = RunConfig::from_json(MINIMAL).unwrap();
        let mut b = a.clone();
        b.out_dir = Some("elsewhere".into());
        assert_eq!(a.hash(), b.hash());
        b.analysis.consensus_n = vec![3];
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.model_hash(), b.model_hash());
        b.train.epochs += 1;
        assert_eq!(a.data_hash(), b.data_hash());
        assert_ne!(a.model_hash(), b.model_hash());
        b.seed = 4;
        assert_ne!(a.data_hash(), b.data_hash());
    }

    #[test]
    fn validation_catches_bad_requests() {
        let mut cfg = RunConfig::from_json(MINIMAL).unwrap();
        cfg.analysis.sweep = Some(SweepRequest { param: "r9".into(), count: 21, factor: 2.0 });
        assert!(cfg.validate().is_err());
        cfg.analysis.sweep = Some(SweepRequest { param: "r2".into(), count: 20, factor: 2.0 });
        assert!(cfg.validate().is_err());
        cfg.analysis.sweep = Some(SweepRequest { param: "r2".into(), count: 21, factor: 2.0 });
        cfg.validate().unwrap();
        cfg.analysis.flux_sweep = Some(FluxSweepRequest { reaction: "EX_glc".into(), count: 5, largest: 10.0 });
        assert!(cfg.validate().is_err());

        let abm = RunConfig::from_json(
            r#"{"family": {"kind": "abm", "side": 12, "steps": 5}, "samples": 4, "seed": 1,
                "analysis": {"sweep": {"param": "cancer_proliferation"}}}"#,
        )
        .unwrap();
        assert!(abm.validate().is_err(), "single replicate stochastic sweep");
    }
}

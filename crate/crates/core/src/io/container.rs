//! Binary containers: the magic bytes `SIMREP1`, a little-endian `u32`
//! header length, a UTF-8 JSON header, then little-endian `f32` payload.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::contrastive::{EnsembleModel, Normalization};
use crate::nn::{init_encoder, Encoder, EncoderSpec};
use crate::simulators::{OutputMeta, ShapeTag, SimulationOutput};

pub const MAGIC: &[u8; 7] = b"SIMREP1";
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ContainerError {
    #[error("not a container (bad magic bytes)")]
    BadMagic,
    #[error("truncated: {0}")]
    Truncated(String),
    #[error("schema version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("payload holds {found} records, header declares {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("expected a {expected} container, found {found}")]
    Kind { expected: String, found: String },
    #[error("header: {0}")]
    Header(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl ContainerError {
    /// Stable numeric code per error kind.
    pub fn code(&self) -> u8 {
        match self {
            ContainerError::BadMagic => 10,
            ContainerError::Truncated(_) => 11,
            ContainerError::VersionMismatch { .. } => 12,
            ContainerError::LengthMismatch { .. } => 13,
            ContainerError::Kind { .. } => 14,
            ContainerError::Header(_) => 15,
            ContainerError::Io(_) => 16,
        }
    }
}

fn frame(header: &impl Serialize, payload: &[f32]) -> Result<Vec<u8>, ContainerError> {
    let json = serde_json::to_vec(header).map_err(|e| ContainerError::Header(e.to_string()))?;
    let len = u32::try_from(json.len()).map_err(|_| ContainerError::Header("header too large".into()))?;
    let mut bytes = Vec::with_capacity(MAGIC.len() + 4 + json.len() + 4 * payload.len());
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&len.to_le_bytes());
    bytes.extend_from_slice(&json);
    for v in payload {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    Ok(bytes)
}

#[derive(Deserialize)]
struct Probe {
    schema_version: u32,
    kind: String,
}

/// Splits a container into its parsed header and payload bytes.
fn unframe<'a, H: for<'de> Deserialize<'de>>(bytes: &'a [u8], kind: &str) -> Result<(H, &'a [u8]), ContainerError> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(ContainerError::BadMagic);
    }
    let rest = &bytes[MAGIC.len()..];
    if rest.len() < 4 {
        return Err(ContainerError::Truncated("missing header length".into()));
    }
    let len = u32::from_le_bytes(rest[..4].try_into().expect("four bytes")) as usize;
    let rest = &rest[4..];
    if rest.len() < len {
        return Err(ContainerError::Truncated(format!("header needs {len} bytes, {} present", rest.len())));
    }
    let (json, payload) = rest.split_at(len);
    let probe: Probe = serde_json::from_slice(json).map_err(|e| ContainerError::Header(e.to_string()))?;
    if probe.schema_version != SCHEMA_VERSION {
        return Err(ContainerError::VersionMismatch { found: probe.schema_version, expected: SCHEMA_VERSION });
    }
    if probe.kind != kind {
        return Err(ContainerError::Kind { expected: kind.into(), found: probe.kind });
    }
    let header = serde_json::from_slice(json).map_err(|e| ContainerError::Header(e.to_string()))?;
    Ok((header, payload))
}

fn read_f32s(bytes: &[u8]) -> Vec<f32> {
    bytes.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("four bytes"))).collect()
}

/// Writes through a temporary sibling file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), std::io::Error> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)
}

/// A stored set of simulation outputs with their parameters and seeds.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub shape_tag: ShapeTag,
    pub dims: Vec<usize>,
    pub param_names: Vec<String>,
    pub outputs: Vec<SimulationOutput>,
}

#[derive(Serialize, Deserialize)]
struct DatasetHeader {
    schema_version: u32,
    kind: String,
    shape_tag: ShapeTag,
    dims: Vec<usize>,
    count: usize,
    param_names: Vec<String>,
    seeds: Vec<u64>,
}

impl Dataset {
    pub fn new(param_names: Vec<String>, outputs: Vec<SimulationOutput>) -> Result<Self, ContainerError> {
        let first = outputs.first().ok_or_else(|| ContainerError::Header("empty dataset".into()))?;
        let ds = Self { shape_tag: first.shape_tag, dims: first.dims.clone(), param_names, outputs };
        ds.check()?;
        Ok(ds)
    }

    fn check(&self) -> Result<(), ContainerError> {
        for (i, o) in self.outputs.iter().enumerate() {
            if o.shape_tag != self.shape_tag || o.dims != self.dims {
                return Err(ContainerError::Header(format!("sample {i} has shape {:?}", o.dims)));
            }
            if o.meta.params.len() != self.param_names.len() {
                return Err(ContainerError::Header(format!(
                    "sample {i} has {} parameters, expected {}",
                    o.meta.params.len(),
                    self.param_names.len()
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, ContainerError> {
        self.check()?;
        let header = DatasetHeader {
            schema_version: SCHEMA_VERSION,
            kind: "dataset".into(),
            shape_tag: self.shape_tag,
            dims: self.dims.clone(),
            count: self.outputs.len(),
            param_names: self.param_names.clone(),
            seeds: self.outputs.iter().map(|o| o.meta.seed).collect(),
        };
        let mut payload: Vec<f32> = self.outputs.iter().flat_map(|o| o.data.iter().map(|&v| v as f32)).collect();
        payload.extend(self.outputs.iter().flat_map(|o| o.meta.params.iter().map(|&v| v as f32)));
        frame(&header, &payload)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ContainerError> {
        let (h, payload): (DatasetHeader, _) = unframe(bytes, "dataset")?;
        if h.dims.len() != h.shape_tag.rank() {
            return Err(ContainerError::Header(format!("{:?} dims for a {} dataset", h.dims, h.shape_tag.as_str())));
        }
        if h.seeds.len() != h.count {
            return Err(ContainerError::Header(format!("{} seeds for {} samples", h.seeds.len(), h.count)));
        }
        let sample: usize = h.dims.iter().product();
        let record = 4 * (sample + h.param_names.len());
        if record == 0 || payload.len() % record != 0 {
            return Err(ContainerError::Truncated(format!("payload of {} bytes is not whole records", payload.len())));
        }
        let found = payload.len() / record;
        if found != h.count {
            return Err(ContainerError::LengthMismatch { expected: h.count, found });
        }
        let values = read_f32s(payload);
        let (data, params) = values.split_at(h.count * sample);
        let p = h.param_names.len();
        let outputs = (0..h.count)
            .map(|i| SimulationOutput {
                shape_tag: h.shape_tag,
                dims: h.dims.clone(),
                data: data[i * sample..(i + 1) * sample].iter().map(|&v| v as f64).collect(),
                meta: OutputMeta { params: params[i * p..(i + 1) * p].iter().map(|&v| v as f64).collect(), seed: h.seeds[i] },
            })
            .collect();
        Ok(Self { shape_tag: h.shape_tag, dims: h.dims, param_names: h.param_names, outputs })
    }

    pub fn save(&self, path: &Path) -> Result<(), ContainerError> {
        Ok(write_atomic(path, &self.to_bytes()?)?)
    }

    pub fn load(path: &Path) -> Result<Self, ContainerError> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

/// Where a stored model came from.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
}

#[derive(Serialize, Deserialize)]
struct ModelHeader {
    schema_version: u32,
    kind: String,
    spec: EncoderSpec,
    normalization: Normalization,
    members: usize,
    member_seeds: Vec<u64>,
    params_per_member: usize,
    loss_curves: Vec<Vec<f64>>,
    provenance: Provenance,
}

pub fn model_to_bytes(model: &EnsembleModel, provenance: &Provenance) -> Result<Vec<u8>, ContainerError> {
    let params_per_member = model.members.first().map_or(0, |m| m.weights.param_count());
    let header = ModelHeader {
        schema_version: SCHEMA_VERSION,
        kind: "model".into(),
        spec: model.spec.clone(),
        normalization: model.normalization.clone(),
        members: model.members.len(),
        member_seeds: model.member_seeds.clone(),
        params_per_member,
        loss_curves: model.loss_curves.clone(),
        provenance: provenance.clone(),
    };
    let payload: Vec<f32> = model.members.iter().flat_map(|m| m.weights.to_flat()).collect();
    frame(&header, &payload)
}

pub fn model_from_bytes(bytes: &[u8]) -> Result<(EnsembleModel, Provenance), ContainerError> {
    let (h, payload): (ModelHeader, _) = unframe(bytes, "model")?;
    let invalid = |e: crate::nn::NnError| ContainerError::Header(e.to_string());
    h.spec.validate().map_err(invalid)?;
    let expected = h.spec.param_count().map_err(invalid)?;
    if expected != h.params_per_member || h.member_seeds.len() != h.members || h.loss_curves.len() != h.members {
        return Err(ContainerError::Header("member counts disagree with the encoder spec".into()));
    }
    let record = 4 * expected;
    if record == 0 || payload.len() % record != 0 {
        return Err(ContainerError::Truncated(format!("payload of {} bytes is not whole members", payload.len())));
    }
    let found = payload.len() / record;
    if found != h.members {
        return Err(ContainerError::LengthMismatch { expected: h.members, found });
    }
    let flat = read_f32s(payload);
    let members = h
        .member_seeds
        .iter()
        .enumerate()
        .map(|(k, &seed)| {
            let mut weights = init_encoder::<f32>(&h.spec, seed).map_err(invalid)?.weights;
            weights.load_flat(&flat[k * expected..(k + 1) * expected]).map_err(invalid)?;
            Encoder::from_weights(&h.spec, weights).map_err(invalid)
        })
        .collect::<Result<_, _>>()?;
    let model = EnsembleModel {
        spec: h.spec,
        members,
        normalization: h.normalization,
        loss_curves: h.loss_curves,
        member_seeds: h.member_seeds,
    };
    Ok((model, h.provenance))
}

pub fn save_model(path: &Path, model: &EnsembleModel, provenance: &Provenance) -> Result<(), ContainerError> {
    Ok(write_atomic(path, &model_to_bytes(model, provenance)?)?)
}

pub fn load_model(path: &Path) -> Result<(EnsembleModel, Provenance), ContainerError> {
    model_from_bytes(&std::fs::read(path)?)
}

use rayon::prelude::*;

use super::{Embedding, EmbeddingError};
use crate::contrastive::EnsembleModel;
use crate::nn::Encoder;
use crate::simulators::SimulationOutput;

/// Points projected by each member: `[member][point]`.
pub type MemberProjections = Vec<Vec<Embedding>>;

const CHUNK: usize = 256;

fn check_shape(model: &EnsembleModel, out: &SimulationOutput) -> Result<(), EmbeddingError> {
    if out.dims != model.spec.input_shape {
        return Err(EmbeddingError::Shape(format!(
            "output dims {:?} do not match encoder input {:?}",
            out.dims, model.spec.input_shape
        )));
    }
    Ok(())
}

fn embed_rows(encoder: &Encoder<f64>, rows: &[f64], count: usize) -> Result<Vec<Embedding>, EmbeddingError> {
    let dim = encoder.output_dim();
    let out = encoder.embed(rows, count)?;
    Ok(out.chunks_exact(dim).map(|c| Embedding(c.to_vec())).collect())
}

/// One embedding per member. Normalization and the forward pass run in
/// double precision on the stored weights.
pub fn project(model: &EnsembleModel, out: &SimulationOutput) -> Result<Vec<Embedding>, EmbeddingError> {
    check_shape(model, out)?;
    let x = model.normalization.apply(out)?;
    model
        .members
        .iter()
        .map(|m| Ok(embed_rows(&m.cast::<f64>(), &x, 1)?.remove(0)))
        .collect()
}

/// Projects every output with every member.
pub fn project_dataset(model: &EnsembleModel, outputs: &[SimulationOutput]) -> Result<MemberProjections, EmbeddingError> {
    for o in outputs {
        check_shape(model, o)?;
    }
    let features = model.normalization.features();
    let mut rows = Vec::with_capacity(outputs.len() * features);
    for o in outputs {
        rows.extend(model.normalization.apply(o)?);
    }
    model
        .members
        .par_iter()
        .map(|m| {
            let enc = m.cast::<f64>();
            let mut points = Vec::with_capacity(outputs.len());
            for chunk in rows.chunks(CHUNK * features) {
                points.extend(embed_rows(&enc, chunk, chunk.len() / features)?);
            }
            Ok(points)
        })
        .collect()
}

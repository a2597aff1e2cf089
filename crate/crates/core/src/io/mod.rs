//! Files on disk: binary containers, run configuration, CSV and SVG output,
//! and per-command manifests.

pub mod config;
pub mod container;
pub mod manifest;
pub mod svg;
pub mod table;

use thiserror::Error;

pub use config::RunConfig;
pub use container::{
    load_model, model_from_bytes, model_to_bytes, save_model, write_atomic, ContainerError, Dataset, Provenance,
};
pub use manifest::{Artifact, Manifest};
pub use svg::{emit_svg, render_svg, HistPanel, Plot, Series};
pub use table::{emit_csv, read_csv, Table};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("table: {0}")]
    Schema(String),
    #[error(transparent)]
    Container(#[from] ContainerError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Fs(#[from] std::io::Error),
}

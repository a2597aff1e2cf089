//! Model families that produce simulation outputs, plus synthetic test data.

pub mod abm;
pub mod family;
pub mod fba;
pub mod lv;
pub mod monte_carlo;
mod output;
pub mod testdata;

use thiserror::Error;

pub use abm::{abm_simulate, AbmParams, AbmRates, Cell, Lattice};
pub use family::{FamilyKind, ModelFamily, DEFAULT_FBA_PARAMS};
pub use fba::{fba_knockout, fba_solve, FbaError, FluxNetwork, FluxSolution, Reaction};
pub use lv::{lv_simulate, LvParams, LvSettings};
pub use monte_carlo::{monte_carlo, replicate_seed, MonteCarloRun, ParamRanges, SampleFailure};
pub use output::{OutputMeta, ShapeTag, SimulationOutput};
pub use testdata::{gen_testdata, transform9, TestData, TestDataKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("shape: {0}")]
    Shape(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("parameters: {0}")]
    Params(String),
    #[error("state diverged at t = {time}")]
    Diverged { time: f64 },
    #[error(transparent)]
    Fba(#[from] FbaError),
}

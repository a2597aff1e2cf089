pub mod analysis;
pub mod cli;
pub mod contrastive;
pub mod embedding;
pub mod io;
pub mod nn;
pub mod rng;
pub mod simulators;

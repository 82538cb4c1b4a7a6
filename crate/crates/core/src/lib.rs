//! Nishimori temperature estimation and Bethe-Hessian spectral classification
//! on sparse weighted graphs.

pub mod classify;
pub mod eigen;
pub mod error;
pub mod generate;
pub mod graph;
pub mod kernel;
pub mod matrices;
pub mod nishimori;
pub mod nonbacktracking;
pub mod rng;
pub mod sparse;
pub mod validate;
pub mod weights;

pub use error::{Error, Result};
pub use generate::{LabeledInstance, Topology};
pub use graph::WeightedGraph;
pub use weights::WeightDistribution;

//! Hybrid quantum-classical TSP toolkit: a simulated quantum ant colony
//! optimizer with K-means problem decomposition, a classical ant colony
//! baseline, TSPLIB ingestion, and a seeded benchmark harness with
//! gate-noise robustness sweeps.

pub mod aco;
pub mod bench;
pub mod cluster;
pub mod error;
pub mod oracle;
pub mod pheromone;
pub mod qsim;
pub mod tspio;

pub use error::{QacoError, Result};

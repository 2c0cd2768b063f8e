//! fedsim: a federated-learning simulation engine.
//!
//! Static federated tasks live on disk, pluggable partitioners induce data
//! heterogeneity, a global-virtual-clock client-state-machine simulator
//! models system heterogeneity, and synchronous plus asynchronous algorithms
//! are compared under a single virtual-time metric. Experiment tooling
//! (records, analyzer, grid tuner, parallel runners) rounds it out.

pub mod algorithms;
pub mod benchmark;
pub mod cli;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod model;
pub mod partition;
pub mod rng;
pub mod sgd;
pub mod simulator;

pub use error::{Error, Result};

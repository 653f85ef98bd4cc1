//! Monte Carlo simulation and resource allocation for an all-photonic
//! quantum switch that distributes entanglement with GKP-encoded qubits.
//!
//! The pipeline runs bottom-up:
//!
//! - [`noise`]: GKP displacement noise, lossy-channel variance and the
//!   analog error likelihood of a measured quadrature remainder.
//! - [`steane`]: Steane `[[7,1,3]]` decoding of stored (inner-leaf) qubits.
//! - [`link`]: outer-leaf Bell measurements, ranked by success probability.
//! - [`germ`]: greedy matching of ranked links between clients.
//! - [`rates`]: end-to-end hashing-bound rates and fairness.
//! - [`allocator`]: searches over link allocations and placements.
//! - [`config`] / [`runner`]: TOML-driven experiments writing CSV + manifest.

pub mod allocator;
pub mod config;
mod error;
pub mod germ;
pub mod link;
pub mod noise;
pub mod rates;
pub mod runner;
pub mod seed;
pub mod steane;

pub use error::{Error, Result};

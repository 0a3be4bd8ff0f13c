//! Communication-efficient clustering of dynamic graphs whose edges arrive
//! over time at many distributed sites.
//!
//! The crate is organised bottom-up:
//!
//! * [`graph`] holds the weighted graph type and Laplacian / cut primitives.
//! * [`sparsify`] is the monotone online spectral sparsifier driven by ridge
//!   leverage scores, plus a dense effective-resistance oracle.
//! * [`clustering`] is normalized spectral clustering and the NCut family of
//!   quality metrics.
//! * [`protocols`] simulates the coordinator and blackboard protocols and the
//!   three baselines, with per-time-point communication ledgers.
//! * [`spanner`] is the greedy monotone spanner used for distance queries.
//! * [`datasets`] generates the Gaussians and image similarity graphs and the
//!   distributed stream schedules.
//! * [`experiment`] is the reproducible harness behind the CLI.

pub mod clustering;
pub mod datasets;
mod error;
pub mod experiment;
pub mod graph;
pub mod io;
pub mod linalg;
pub mod protocols;
pub mod seed;
pub mod spanner;
pub mod sparsify;

pub use error::{Error, Result};
pub use graph::{Graph, NodeId, WeightedEdge};

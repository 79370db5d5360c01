//! Random walks on comb graphs with truncated teeth.
//!
//! The crate models the comb family lazily (nothing is ever materialized), and
//! provides exact propagation of walker laws, electrical-network quantities on
//! finite windows, a reproducible Monte Carlo engine for `k` independent
//! walkers, and a suite of numerical checks for heat-kernel, exit-time and
//! second-moment inequalities.

pub mod error;
pub mod estimates;
pub mod graph;
pub mod kernel;
pub mod linalg;
pub mod resistance;
pub mod sim;

pub use error::{Error, Result};
pub use graph::{Ball, Comb, CombSpec, Family, Region, Strip, Vertex};

use thiserror::Error;

use crate::graph::Vertex;

#[derive(Debug, Error)]
pub enum Error {
    #[error("vertex {0} is not a vertex of the comb")]
    Inadmissible(Vertex),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("target region is empty: {0}")]
    EmptyTargetRegion(String),

    #[error("resource limit exceeded for {what}: needs {needed} work units, cap is {cap}")]
    ResourceLimit {
        what: String,
        needed: u128,
        cap: u128,
    },

    #[error("singular system: {0}")]
    Singular(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

//! Sparse collaborative 3D detection: voxel feature extraction into compact
//! object-level records, byte-accounted exchange between agents, temporal
//! fusion and rotated-box evaluation.

pub mod comm;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod extractor;
pub mod fusion;
pub mod geometry;
pub mod scenario;
pub mod sparse;
pub mod trace;

use serde::{Deserialize, Serialize};

pub use error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AgentId(pub u32);

impl std::fmt::Display for AgentId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "agent{}", self.0)
    }
}

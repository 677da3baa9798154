use serde::{Deserialize, Serialize};

use crate::AgentId;

/// Semantic detection box: one object-level sparse feature.
///
/// `position` is a real-valued `(row, col)` index on the sender's stride-1
/// grid, already shifted by the predicted centre deviation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SemDb {
    pub position: (f64, f64),
    pub confidence: f64,
    pub feature: Vec<f64>,
    pub source_agent: AgentId,
    pub timestamp_ms: u64,
}

impl SemDb {
    pub fn channels(&self) -> usize {
        self.feature.len()
    }

    pub fn feature_norm(&self) -> f64 {
        self.feature.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

//! Transmission volume and the log2 "average byte" (AB) metric.

use serde::{Deserialize, Serialize};

use super::packet::CommPacket;

/// Spatial index dimensions carried per SemDB.
pub const INDEX_DIMS: usize = 2;
const FLOAT32_BYTES: f64 = 32.0 / 8.0;

/// Bytes for `m` SemDBs from one collaborator counting index and feature
/// values only: `m * (C + 2) * 4`.
pub fn collaborator_bytes(m: usize, channels: usize) -> f64 {
    (m * (channels + INDEX_DIMS)) as f64 * FLOAT32_BYTES
}

/// `log2(bytes)`, or `None` for a frame that sent nothing.
pub fn ab_from_bytes(bytes: f64) -> Option<f64> {
    (bytes > 0.0).then(|| bytes.log2())
}

/// Per-frame volume received by one ego.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameCost {
    /// Index + feature values, the benchmark convention.
    pub paper_bytes: f64,
    /// Actual entry bytes including the confidence value.
    pub wire_bytes: f64,
}

impl FrameCost {
    pub fn ab_paper(&self) -> Option<f64> {
        ab_from_bytes(self.paper_bytes)
    }

    pub fn ab_wire(&self) -> Option<f64> {
        ab_from_bytes(self.wire_bytes)
    }

    pub fn is_silent(&self) -> bool {
        self.paper_bytes == 0.0
    }
}

/// Sums the cost of all collaborator packets bound for one ego in one frame.
pub fn transmission_cost<'a>(packets: impl IntoIterator<Item = &'a CommPacket>) -> FrameCost {
    let mut cost = FrameCost {
        paper_bytes: 0.0,
        wire_bytes: 0.0,
    };
    for p in packets {
        cost.paper_bytes += collaborator_bytes(p.len(), p.channels());
        cost.wire_bytes += p.payload_bytes() as f64;
    }
    cost
}

/// Dataset-level AB: arithmetic mean of per-frame AB over frames that
/// actually communicated.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AbAccumulator {
    paper_sum: f64,
    wire_sum: f64,
    communicating: usize,
    silent: usize,
}

/// Mean AB values; `no_communication` is set when no frame sent anything, in
/// which case both values are reported as 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbSummary {
    pub ab_paper: f64,
    pub ab_wire: f64,
    pub communicating_frames: usize,
    pub silent_frames: usize,
    pub no_communication: bool,
}

impl AbAccumulator {
    pub fn push(&mut self, cost: FrameCost) {
        match (cost.ab_paper(), cost.ab_wire()) {
            (Some(p), Some(w)) => {
                self.paper_sum += p;
                self.wire_sum += w;
                self.communicating += 1;
            }
            _ => self.silent += 1,
        }
    }

    pub fn push_ab(&mut self, ab: Option<f64>) {
        match ab {
            Some(v) => {
                self.paper_sum += v;
                self.wire_sum += v;
                self.communicating += 1;
            }
            None => self.silent += 1,
        }
    }

    pub fn summary(&self) -> AbSummary {
        let n = self.communicating;
        AbSummary {
            ab_paper: if n > 0 { self.paper_sum / n as f64 } else { 0.0 },
            ab_wire: if n > 0 { self.wire_sum / n as f64 } else { 0.0 },
            communicating_frames: n,
            silent_frames: self.silent,
            no_communication: n == 0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::comm::serialize;
    use crate::extractor::SemDb;
    use crate::AgentId;

    #[test]
    fn one_megabyte_is_ab_20() {
        assert_eq!(ab_from_bytes((1u64 << 20) as f64), Some(20.0));
    }

    #[test]
    fn ten_semdbs_of_32_channels() {
        let ab = ab_from_bytes(collaborator_bytes(10, 32)).unwrap();
        assert!((ab - 1360f64.log2()).abs() < 1e-12);
        assert!((ab - 10.409).abs() < 1e-3);
    }

    #[test]
    fn dataset_mean_skips_silent_frames() {
        let mut acc = AbAccumulator::default();
        acc.push_ab(Some(10.0));
        acc.push_ab(None);
        acc.push_ab(Some(12.0));
        let s = acc.summary();
        assert_eq!(s.ab_paper, 11.0);
        assert_eq!(s.silent_frames, 1);
        assert!(!s.no_communication);
        let none = AbAccumulator::default().summary();
        assert!(none.no_communication);
        assert_eq!(none.ab_paper, 0.0);
    }

    #[test]
    fn wire_count_includes_confidence() {
        let s = SemDb {
            position: (1.0, 2.0),
            confidence: 1.0,
            feature: vec![0.0; 32],
            source_agent: AgentId(1),
            timestamp_ms: 0,
        };
        let p = serialize(&vec![s; 10], 32, AgentId(1), 0).unwrap();
        let cost = transmission_cost([&p]);
        assert_eq!(cost.paper_bytes, 1360.0);
        assert_eq!(cost.wire_bytes, 1400.0);
        let silent = transmission_cost([&serialize(&[], 32, AgentId(2), 0).unwrap()]);
        assert!(silent.is_silent());
        assert_eq!(silent.ab_paper(), None);
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::extractor::SemDb;

pub const RTE_BASE: f64 = 10_000.0;

/// Unit in which feature age is expressed before encoding.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeUnit {
    /// Whole frame intervals (0, 1, 2, ...).
    #[default]
    Frames,
    Milliseconds,
}

/// Sinusoidal relative-time encoding of dimension `dim`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RteSpec {
    pub dim: usize,
    pub unit: TimeUnit,
    pub frame_interval_ms: u64,
}

impl RteSpec {
    pub fn new(dim: usize, unit: TimeUnit, frame_interval_ms: u64) -> Result<Self> {
        if dim == 0 || !dim.is_multiple_of(2) {
            return Err(contract(format!("RTE dimension {dim} must be positive and even")));
        }
        if frame_interval_ms == 0 {
            return Err(contract("frame interval must be positive"));
        }
        Ok(Self {
            dim,
            unit,
            frame_interval_ms,
        })
    }

    /// Age of data stamped `ts_ms` at `now_ms`, in this spec's unit.
    pub fn age(&self, now_ms: u64, ts_ms: u64) -> Result<f64> {
        if ts_ms > now_ms {
            return Err(contract(format!("timestamp {ts_ms} ms is in the future of {now_ms} ms")));
        }
        let ms = (now_ms - ts_ms) as f64;
        Ok(match self.unit {
            TimeUnit::Frames => ms / self.frame_interval_ms as f64,
            TimeUnit::Milliseconds => ms,
        })
    }
}

/// Angular frequency of channel pair `k`: `base^(-2k/dim)`.
pub fn frequency(k: usize, dim: usize) -> f64 {
    RTE_BASE.powf(-2.0 * k as f64 / dim as f64)
}

/// `[sin(w_0 dt), cos(w_0 dt), sin(w_1 dt), cos(w_1 dt), ...]`.
pub fn rte_vector(dt: f64, dim: usize) -> Vec<f64> {
    let mut v = Vec::with_capacity(dim);
    for k in 0..dim / 2 {
        let (s, c) = (dt * frequency(k, dim)).sin_cos();
        v.push(s);
        v.push(c);
    }
    v
}

/// Adds the encoding of each SemDB's age to its feature.
pub fn apply_rte(semdbs: &[SemDb], now_ms: u64, spec: &RteSpec) -> Result<Vec<SemDb>> {
    semdbs
        .iter()
        .map(|s| {
            if s.feature.len() != spec.dim {
                return Err(contract(format!(
                    "feature width {} differs from RTE dimension {}",
                    s.feature.len(),
                    spec.dim
                )));
            }
            let enc = rte_vector(spec.age(now_ms, s.timestamp_ms)?, spec.dim);
            let mut out = s.clone();
            for (f, e) in out.feature.iter_mut().zip(enc) {
                *f += e;
            }
            Ok(out)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::AgentId;

    #[test]
    fn zero_age_alternates() {
        let v = rte_vector(0.0, 8);
        assert_eq!(v, vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn four_dims_at_unit_age() {
        let v = rte_vector(1.0, 4);
        let w = 10_000f64.powf(-0.5);
        let want = [1f64.sin(), 1f64.cos(), w.sin(), w.cos()];
        for (a, b) in v.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn apply_adds_encoding_and_rejects_future() {
        let spec = RteSpec::new(4, TimeUnit::Frames, 100).unwrap();
        let s = SemDb {
            position: (1.0, 1.0),
            confidence: 0.5,
            feature: vec![1.0; 4],
            source_agent: AgentId(0),
            timestamp_ms: 100,
        };
        let fresh = apply_rte(std::slice::from_ref(&s), 100, &spec).unwrap();
        let old = apply_rte(std::slice::from_ref(&s), 300, &spec).unwrap();
        let diff: Vec<f64> = old[0].feature.iter().zip(&fresh[0].feature).map(|(a, b)| a - b).collect();
        let want: Vec<f64> = rte_vector(2.0, 4).iter().zip(rte_vector(0.0, 4)).map(|(a, b)| a - b).collect();
        for (d, w) in diff.iter().zip(&want) {
            assert!((d - w).abs() < 1e-12);
        }
        assert_eq!(fresh[0].position, s.position);
        assert!(apply_rte(&[s], 50, &spec).is_err());
    }

    #[test]
    fn sweep_ages_are_distinguishable() {
        for unit in [TimeUnit::Frames, TimeUnit::Milliseconds] {
            let spec = RteSpec::new(32, unit, 100).unwrap();
            let vs: Vec<Vec<f64>> = (0..=4)
                .map(|i| rte_vector(spec.age(i * 100, 0).unwrap(), 32))
                .collect();
            for i in 0..vs.len() {
                for j in i + 1..vs.len() {
                    let d: f64 = vs[i].iter().zip(&vs[j]).map(|(a, b)| (a - b).powi(2)).sum();
                    assert!(d > 0.0);
                }
            }
        }
    }
}

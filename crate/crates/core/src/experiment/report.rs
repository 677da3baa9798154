use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{Ablation, RunConfig};
use super::run::{run, MetricsReport};
use crate::error::{Error, Result};

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

const CSV_HEADER: [&str; 20] = [
    "latency_ms",
    "config",
    "frames",
    "ap50",
    "ap70",
    "ap50_observed",
    "ap70_observed",
    "gt_in_range",
    "gt_observed",
    "detections",
    "ab_paper",
    "ab_wire",
    "communication",
    "communicating_frames",
    "semdbs_sent_mean",
    "semdbs_fused_mean",
    "semdbs_fused_max",
    "loss",
    "history",
    "seed",
];

impl MetricsReport {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER)?;
        for r in &self.rows {
            w.write_record([
                r.latency_ms.to_string(),
                r.config.clone(),
                r.frames.to_string(),
                opt(r.ap50),
                opt(r.ap70),
                opt(r.ap50_observed),
                opt(r.ap70_observed),
                r.gt_in_range.to_string(),
                r.gt_observed.to_string(),
                r.detections.to_string(),
                opt(r.ab_paper),
                opt(r.ab_wire),
                if r.no_communication { "no-communication" } else { "ok" }.to_string(),
                r.communicating_frames.to_string(),
                r.semdbs_sent_mean.to_string(),
                r.semdbs_fused_mean.to_string(),
                r.semdbs_fused_max.to_string(),
                r.loss.to_string(),
                self.meta.config.history.to_string(),
                self.meta.config.seed.to_string(),
            ])?;
        }
        into_string(w)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Writes the CSV to `path` and the JSON sidecar next to it.
    pub fn write(&self, path: &Path) -> Result<PathBuf> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, self.to_csv()?)?;
        let sidecar = sidecar_path(path);
        std::fs::write(&sidecar, self.to_json()?)?;
        Ok(sidecar)
    }

    /// Reads a report from its JSON sidecar, given either file.
    pub fn read(path: &Path) -> Result<Self> {
        let json = sidecar_path(path);
        let text = std::fs::read_to_string(&json)?;
        Ok(serde_json::from_str(&text)?)
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

fn into_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Differences of one report against the baseline at one latency.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaRow {
    pub latency_ms: u64,
    pub baseline: String,
    pub other: String,
    pub d_ap50: Option<f64>,
    pub d_ap70: Option<f64>,
    pub d_ab_paper: Option<f64>,
    pub d_ab_wire: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaTable {
    pub rows: Vec<DeltaRow>,
}

impl DeltaTable {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["latency_ms", "baseline", "other", "d_ap50", "d_ap70", "d_ab_paper", "d_ab_wire"])?;
        for r in &self.rows {
            w.write_record([
                r.latency_ms.to_string(),
                r.baseline.clone(),
                r.other.clone(),
                opt(r.d_ap50),
                opt(r.d_ap70),
                opt(r.d_ab_paper),
                opt(r.d_ab_wire),
            ])?;
        }
        into_string(w)
    }
}

fn diff(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    Some(b? - a?)
}

/// Row-aligned deltas of every report against the first (`other - first`).
///
/// Reports must come from the same scenario and seed and cover the same
/// latencies.
pub fn compare(reports: &[MetricsReport]) -> Result<DeltaTable> {
    let Some((base, others)) = reports.split_first() else {
        return Err(Error::Comparison("no reports given".into()));
    };
    // A lone report is compared against itself.
    let others = if others.is_empty() { std::slice::from_ref(base) } else { others };
    let mut rows = Vec::new();
    for other in others {
        if other.meta.scenario_hash != base.meta.scenario_hash {
            return Err(Error::Comparison(format!(
                "scenario differs: {} vs {}",
                base.meta.scenario_hash, other.meta.scenario_hash
            )));
        }
        if other.meta.config.seed != base.meta.config.seed {
            return Err(Error::Comparison(format!(
                "seed differs: {} vs {}",
                base.meta.config.seed, other.meta.config.seed
            )));
        }
        let a: BTreeSet<u64> = base.rows.iter().map(|r| r.latency_ms).collect();
        let b: BTreeSet<u64> = other.rows.iter().map(|r| r.latency_ms).collect();
        if a != b {
            let missing: Vec<String> = a.symmetric_difference(&b).map(|l| format!("latency_ms={l}")).collect();
            return Err(Error::Comparison(format!("rows do not align; unmatched keys: {}", missing.join(", "))));
        }
        for r in &base.rows {
            let o = other.rows.iter().find(|o| o.latency_ms == r.latency_ms).expect("aligned");
            rows.push(DeltaRow {
                latency_ms: r.latency_ms,
                baseline: r.config.clone(),
                other: o.config.clone(),
                d_ap50: diff(r.ap50, o.ap50),
                d_ap70: diff(r.ap70, o.ap70),
                d_ab_paper: diff(r.ab_paper, o.ab_paper),
                d_ab_wire: diff(r.ab_wire, o.ab_wire),
            });
        }
    }
    Ok(DeltaTable { rows })
}

/// Latencies of the ablation grid: synchronous and one frame late.
pub const ABLATION_LATENCIES: [u64; 2] = [0, 100];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub flags: Ablation,
    pub ap50_sync: Option<f64>,
    pub ap50_late: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub rows: Vec<AblationRow>,
}

impl AblationTable {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["rte", "se", "rw", "rv", "tf", "ap50_0ms", "ap50_100ms"])?;
        let mark = |b: bool| if b { "on" } else { "off" }.to_string();
        for r in &self.rows {
            let f = r.flags;
            w.write_record([
                mark(f.rte),
                mark(f.shuffle_ego),
                mark(f.reweight),
                mark(f.revoxelize),
                mark(f.temporal_fusion),
                opt(r.ap50_sync),
                opt(r.ap50_late),
            ])?;
        }
        into_string(w)
    }
}

/// Runs the seven standard flag combinations at 0 and 100 ms.
pub fn run_ablation(base: &RunConfig) -> Result<AblationTable> {
    let rows = Ablation::table_rows()
        .into_iter()
        .map(|flags| {
            let cfg = RunConfig {
                flags,
                latencies_ms: ABLATION_LATENCIES.to_vec(),
                ..base.clone()
            };
            let report = run(&cfg)?;
            let ap = |l: u64| report.rows.iter().find(|r| r.latency_ms == l).and_then(|r| r.ap50);
            Ok(AblationRow {
                flags,
                ap50_sync: ap(0),
                ap50_late: ap(100),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AblationTable { rows })
}

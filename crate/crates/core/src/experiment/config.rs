use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::extractor::code::CODE_MIN_CHANNELS;
use crate::extractor::HeadMode;
use crate::fusion::TimeUnit;

/// Where the scenario comes from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ScenarioSource {
    File { path: PathBuf },
    /// Generated from a named preset; `seed` defaults to the run seed.
    Preset { name: String, seed: Option<u64> },
}

/// Mechanism switches, all on by default.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Ablation {
    /// Relative temporal encoding (and, for heuristic features, the motion
    /// alignment that reads it).
    pub rte: bool,
    /// Random ego and agent subsets for the training-loss pass.
    pub shuffle_ego: bool,
    /// Confidence re-weighting of transmitted features.
    pub reweight: bool,
    /// Re-binning onto the stride-2 grid instead of stride 4.
    pub revoxelize: bool,
    /// Fuse buffered history instead of only the newest frame per agent.
    pub temporal_fusion: bool,
}

impl Default for Ablation {
    fn default() -> Self {
        Self::all()
    }
}

impl Ablation {
    pub const fn all() -> Self {
        Self {
            rte: true,
            shuffle_ego: true,
            reweight: true,
            revoxelize: true,
            temporal_fusion: true,
        }
    }

    pub const fn none() -> Self {
        Self {
            rte: false,
            shuffle_ego: false,
            reweight: false,
            revoxelize: false,
            temporal_fusion: false,
        }
    }

    /// `RTE+SE+...` for the enabled switches, `baseline` when none are.
    pub fn label(&self) -> String {
        let names = [
            (self.rte, "RTE"),
            (self.shuffle_ego, "SE"),
            (self.reweight, "RW"),
            (self.revoxelize, "RV"),
            (self.temporal_fusion, "TF"),
        ];
        let on: Vec<&str> = names.iter().filter(|(b, _)| *b).map(|(_, n)| *n).collect();
        if on.is_empty() {
            "baseline".into()
        } else {
            on.join("+")
        }
    }

    /// The seven incremental combinations of the standard ablation table.
    pub fn table_rows() -> [Ablation; 7] {
        let n = Self::none();
        let rte = Ablation { rte: true, ..n };
        let se = Ablation { shuffle_ego: true, ..rte };
        let rw = Ablation { reweight: true, ..se };
        [
            n,
            rte,
            se,
            rw,
            Ablation { temporal_fusion: true, ..rw },
            Ablation { revoxelize: true, ..rw },
            Self::all(),
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioSource,
    /// Evaluation ego; defaults to the scenario's test ego.
    pub ego: Option<u32>,
    /// History frames fused besides the current one.
    pub history: usize,
    pub latencies_ms: Vec<u64>,
    pub head_mode: HeadMode,
    pub flags: Ablation,
    /// With `false` the ego fuses only its own SemDBs.
    pub collaborate: bool,
    pub channels: usize,
    pub tau: f64,
    pub window: usize,
    pub time_unit: TimeUnit,
    /// Record operation names per row.
    pub trace: bool,
    pub seed: u64,
    /// Report destination; not part of the resolved config.
    #[serde(skip_serializing)]
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioSource::Preset {
                name: "occlusion".into(),
                seed: None,
            },
            ego: None,
            history: 2,
            latencies_ms: vec![0, 100, 200, 300, 400],
            head_mode: HeadMode::Heuristic,
            flags: Ablation::all(),
            collaborate: true,
            channels: 32,
            tau: 0.3,
            window: 3,
            time_unit: TimeUnit::Frames,
            trace: false,
            seed: 0,
            output: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.latencies_ms.is_empty() {
            return Err(config("latencies_ms", "at least one latency is required"));
        }
        let mut sorted = self.latencies_ms.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(config("latencies_ms", "latencies must be distinct"));
        }
        if self.channels == 0 || !self.channels.is_multiple_of(2) {
            return Err(config("channels", "must be positive and even"));
        }
        if self.head_mode == HeadMode::Heuristic && self.channels < CODE_MIN_CHANNELS {
            return Err(config("channels", format!("heuristic mode needs at least {CODE_MIN_CHANNELS}")));
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(config("tau", "must lie in (0, 1)"));
        }
        if self.window < 3 || self.window.is_multiple_of(2) {
            return Err(config("window", "must be odd and at least 3"));
        }
        if let ScenarioSource::Preset { name, .. } = &self.scenario {
            if !crate::scenario::presets::PRESET_NAMES.contains(&name.as_str()) {
                return Err(config("scenario", format!("unknown preset `{name}`")));
            }
        }
        Ok(())
    }

    /// Row label: flags, history depth, head mode and collaboration.
    pub fn label(&self) -> String {
        let mode = match self.head_mode {
            HeadMode::Heuristic => "heuristic",
            HeadMode::SeededWeights => "seeded",
        };
        let collab = if self.collaborate { "fused" } else { "single" };
        format!("{} p{} {mode} {collab}", self.flags.label(), self.history)
    }
}

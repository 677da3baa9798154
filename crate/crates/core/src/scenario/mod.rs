//! Synthetic multi-agent scenes with ray-cast LiDAR.
//!
//! A [`ScenarioLayout`] holds the initial world state (agents, static
//! occluders, objects with constant velocities). [`simulate`] advances the
//! objects frame by frame and scans each agent's surroundings.

mod format;
mod generate;
pub mod presets;
mod raycast;
mod shuffle;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use format::{load_layout, parse_layout, save_layout, write_layout, FORMAT_NAME, FORMAT_VERSION};
pub use generate::{generate_layout, generate_scenario, DimRanges, MotionModel, ScenarioParams, SpawnRegion};
pub use raycast::{scan, ScanHit};
pub use shuffle::{shuffle_ego_iter, EgoDraw, INCLUSION_PROB};

use crate::comm::Pose;
use crate::error::{Error, Result};
use crate::fusion::DetectionBox;
use crate::geometry::{convex_overlap, point_in_convex, rect_corners, Vec2};
use crate::sparse::PointCloud;
use crate::AgentId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    Vehicle,
    /// Roadside unit: shares data but is never the ego.
    Roadside,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub id: AgentId,
    pub kind: AgentKind,
    pub pose: Pose,
}

/// Static rectangle that blocks rays (a building).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Occluder {
    pub x: f64,
    pub y: f64,
    pub length: f64,
    pub width: f64,
    #[serde(default)]
    pub yaw: f64,
}

impl Occluder {
    pub fn corners(&self) -> [Vec2; 4] {
        rect_corners(Vec2::new(self.x, self.y), self.length, self.width, self.yaw)
    }
}

/// Single-layer scanner replicated at several heights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorParams {
    pub angular_res_deg: f64,
    pub range: f64,
    /// Heights above ground of the replicated scan lines.
    pub beam_heights: Vec<f64>,
    pub intensity: f64,
}

impl Default for SensorParams {
    fn default() -> Self {
        Self {
            angular_res_deg: 0.5,
            range: 80.0,
            beam_heights: vec![0.4, 0.9, 1.4],
            intensity: 0.5,
        }
    }
}

impl SensorParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::ScenarioFormat(format!("sensor: {m}")));
        if !(self.angular_res_deg > 0.0 && self.angular_res_deg <= 90.0) {
            return bad("angular_res_deg must lie in (0, 90]");
        }
        if !(self.range > 0.0 && self.range.is_finite()) {
            return bad("range must be positive");
        }
        if self.beam_heights.is_empty() || self.beam_heights.iter().any(|h| !(h.is_finite() && *h >= 0.0)) {
            return bad("beam_heights must be non-empty and non-negative");
        }
        if !(0.0..=1.0).contains(&self.intensity) {
            return bad("intensity must lie in [0, 1]");
        }
        Ok(())
    }

    pub fn rays(&self) -> usize {
        (360.0 / self.angular_res_deg).round() as usize
    }
}

/// Axis-aligned world region.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub x: (f64, f64),
    pub y: (f64, f64),
}

impl Bounds {
    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.x.0 && p.x <= self.x.1 && p.y >= self.y.0 && p.y <= self.y.1
    }

    pub fn is_valid(&self) -> bool {
        [self.x.0, self.x.1, self.y.0, self.y.1].iter().all(|v| v.is_finite())
            && self.x.0 < self.x.1
            && self.y.0 < self.y.1
    }
}

/// Object at time zero; it moves at `(vx, vy)` m/s.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectState {
    pub x: f64,
    pub y: f64,
    pub h: f64,
    pub w: f64,
    pub l: f64,
    pub yaw: f64,
    #[serde(default)]
    pub vx: f64,
    #[serde(default)]
    pub vy: f64,
}

impl ObjectState {
    pub fn at(&self, t_ms: u64) -> DetectionBox {
        let t = t_ms as f64 / 1000.0;
        DetectionBox {
            x: self.x + self.vx * t,
            y: self.y + self.vy * t,
            z: self.h / 2.0,
            h: self.h,
            w: self.w,
            l: self.l,
            yaw: self.yaw,
            confidence: 1.0,
        }
    }

    pub fn speed(&self) -> f64 {
        self.vx.hypot(self.vy)
    }
}

/// Everything needed to reproduce a scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioLayout {
    pub frames: usize,
    pub frame_interval_ms: u64,
    pub test_ego: AgentId,
    pub bounds: Bounds,
    pub sensor: SensorParams,
    pub agents: Vec<AgentSpec>,
    pub occluders: Vec<Occluder>,
    pub objects: Vec<ObjectState>,
}

impl ScenarioLayout {
    /// Checks the structural and physical invariants: unique agents, a
    /// vehicle test ego, every object inside the bounds at every frame and
    /// no two footprints (objects or occluders) overlapping.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::ScenarioFormat(m));
        if self.frames == 0 {
            return bad("frames must be positive".into());
        }
        if self.frame_interval_ms == 0 {
            return bad("frame_interval_ms must be positive".into());
        }
        if !self.bounds.is_valid() {
            return bad("bounds must be finite and non-empty".into());
        }
        self.sensor.validate()?;
        let mut ids: Vec<AgentId> = self.agents.iter().map(|a| a.id).collect();
        ids.sort();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return bad("duplicate agent id".into());
        }
        match self.agents.iter().find(|a| a.id == self.test_ego) {
            Some(a) if a.kind == AgentKind::Vehicle => {}
            Some(_) => return bad(format!("test ego {} is not a vehicle", self.test_ego)),
            None => return bad(format!("test ego {} is not among the agents", self.test_ego)),
        }
        for (i, o) in self.occluders.iter().enumerate() {
            if ![o.x, o.y, o.yaw].iter().all(|v| v.is_finite()) || !(o.length > 0.0 && o.width > 0.0) {
                return bad(format!("occluder {i} is degenerate"));
            }
        }
        for (i, o) in self.objects.iter().enumerate() {
            let finite = [o.x, o.y, o.yaw, o.vx, o.vy].iter().all(|v| v.is_finite());
            if !finite || !(o.h > 0.0 && o.w > 0.0 && o.l > 0.0) {
                return bad(format!("object {i} is degenerate"));
            }
        }
        for k in 0..self.frames {
            let t = k as u64 * self.frame_interval_ms;
            let boxes: Vec<[Vec2; 4]> = self.objects.iter().map(|o| o.at(t).corners()).collect();
            for (i, b) in boxes.iter().enumerate() {
                if !b.iter().all(|&p| self.bounds.contains(p)) {
                    return bad(format!("object {i} leaves the bounds at frame {k}"));
                }
                if let Some(j) = boxes[..i].iter().position(|o| convex_overlap(o, b)) {
                    return bad(format!("objects {j} and {i} overlap at frame {k}"));
                }
                if let Some(j) = self.occluders.iter().position(|o| convex_overlap(&o.corners(), b)) {
                    return bad(format!("object {i} overlaps occluder {j} at frame {k}"));
                }
                if let Some(a) = self.agents.iter().find(|a| point_in_convex(b, a.pose.position())) {
                    return bad(format!("object {i} covers {} at frame {k}", a.id));
                }
            }
        }
        Ok(())
    }

    pub fn agent(&self, id: AgentId) -> Option<&AgentSpec> {
        self.agents.iter().find(|a| a.id == id)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFrame {
    pub timestamp_ms: u64,
    /// World-frame ground truth.
    pub gt_boxes: Vec<DetectionBox>,
    pub agent_poses: BTreeMap<AgentId, Pose>,
    /// Points in each agent's local frame.
    pub agent_clouds: BTreeMap<AgentId, PointCloud>,
    /// Per gt box, `(vx, vy)` in m/s.
    pub box_velocities: Vec<(f64, f64)>,
    /// Points each agent received from each gt box.
    pub point_counts: BTreeMap<AgentId, Vec<usize>>,
}

impl ScenarioFrame {
    /// Whether any of `agents` has at least one point on box `i`.
    pub fn observed_by(&self, i: usize, agents: &[AgentId]) -> bool {
        agents
            .iter()
            .any(|a| self.point_counts.get(a).is_some_and(|c| c[i] > 0))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub layout: ScenarioLayout,
    pub frames: Vec<ScenarioFrame>,
}

impl Scenario {
    pub fn frame_interval_ms(&self) -> u64 {
        self.layout.frame_interval_ms
    }

    pub fn test_ego(&self) -> AgentId {
        self.layout.test_ego
    }

    pub fn agents(&self) -> &[AgentSpec] {
        &self.layout.agents
    }
}

/// Advances every object to each frame and scans from every agent.
pub fn simulate(layout: &ScenarioLayout) -> Result<Scenario> {
    layout.validate()?;
    let frames = (0..layout.frames)
        .map(|k| {
            let t = k as u64 * layout.frame_interval_ms;
            let gt_boxes: Vec<DetectionBox> = layout.objects.iter().map(|o| o.at(t)).collect();
            let mut agent_poses = BTreeMap::new();
            let mut agent_clouds = BTreeMap::new();
            let mut point_counts = BTreeMap::new();
            for a in &layout.agents {
                agent_poses.insert(a.id, a.pose);
                let hits = scan(&a.pose, &gt_boxes, &layout.occluders, &layout.sensor);
                let mut counts = vec![0; gt_boxes.len()];
                for h in &hits {
                    counts[h.object] += 1;
                }
                point_counts.insert(a.id, counts);
                agent_clouds.insert(a.id, PointCloud { points: hits.into_iter().map(|h| h.point).collect() });
            }
            ScenarioFrame {
                timestamp_ms: t,
                gt_boxes,
                agent_poses,
                agent_clouds,
                box_velocities: layout.objects.iter().map(|o| (o.vx, o.vy)).collect(),
                point_counts,
            }
        })
        .collect();
    Ok(Scenario {
        layout: layout.clone(),
        frames,
    })
}

use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::extractor::SemDb;
use crate::geometry::{normalize_angle, Vec2};
use crate::sparse::VoxelSpec;

/// Planar agent pose in the shared world frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    /// Radians in `(-pi, pi]`.
    pub heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Result<Self> {
        if !(x.is_finite() && y.is_finite() && heading.is_finite()) {
            return Err(contract("pose components must be finite"));
        }
        Ok(Self {
            x,
            y,
            heading: normalize_angle(heading),
        })
    }

    pub const fn origin() -> Self {
        Self {
            x: 0.0,
            y: 0.0,
            heading: 0.0,
        }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn to_world(&self, local: Vec2) -> Vec2 {
        local.rotate(self.heading) + self.position()
    }

    pub fn to_local(&self, world: Vec2) -> Vec2 {
        (world - self.position()).rotate(-self.heading)
    }

    /// Maps a point from `from`'s local frame into `to`'s local frame.
    pub fn relative(from: &Pose, to: &Pose, p: Vec2) -> Vec2 {
        to.to_local(from.to_world(p))
    }

    /// Yaw expressed in this pose's frame given a world yaw.
    pub fn local_yaw(&self, world_yaw: f64) -> f64 {
        normalize_angle(world_yaw - self.heading)
    }
}

/// Re-expresses SemDB positions from the sender's grid in the ego's grid.
///
/// Both agents use the same `spec` relative to their own frame. Entries that
/// fall outside the ego grid are dropped; features and confidences are left
/// untouched.
pub fn transform_to_ego(semdbs: &[SemDb], sender: &Pose, ego: &Pose, spec: &VoxelSpec) -> Vec<SemDb> {
    semdbs
        .iter()
        .filter_map(|s| {
            let (x, y) = spec.index_to_metric(s.position.0, s.position.1);
            let p = Pose::relative(sender, ego, Vec2::new(x, y));
            if !spec.contains(p.x, p.y) {
                return None;
            }
            let mut out = s.clone();
            out.position = spec.metric_to_index(p.x, p.y);
            Some(out)
        })
        .collect()
}

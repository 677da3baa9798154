use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{simulate, AgentSpec, Bounds, ObjectState, Occluder, Scenario, ScenarioLayout, SensorParams};
use crate::error::{Error, Result};
use crate::geometry::{convex_overlap, rect_corners, Vec2};
use crate::AgentId;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum MotionModel {
    Static,
    /// Each object drives along its own heading at a speed drawn uniformly
    /// from `[min_speed, max_speed]` m/s.
    ConstantVelocity { min_speed: f64, max_speed: f64 },
}

/// Uniform ranges for object sizes, metres.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimRanges {
    pub length: (f64, f64),
    pub width: (f64, f64),
    pub height: (f64, f64),
}

impl Default for DimRanges {
    fn default() -> Self {
        Self {
            length: (3.9, 4.9),
            width: (1.7, 2.1),
            height: (1.4, 1.8),
        }
    }
}

/// `count` objects are spawned with centres inside `bounds`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpawnRegion {
    pub bounds: Bounds,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioParams {
    pub frames: usize,
    pub frame_interval_ms: u64,
    pub bounds: Bounds,
    pub regions: Vec<SpawnRegion>,
    pub agents: Vec<AgentSpec>,
    pub test_ego: AgentId,
    pub occluders: Vec<Occluder>,
    pub motion: MotionModel,
    pub dims: DimRanges,
    pub sensor: SensorParams,
    /// Gap kept between any two footprints, metres.
    pub clearance: f64,
    /// Placement attempts per object before giving up.
    pub max_retries: usize,
}

impl ScenarioParams {
    pub fn object_count(&self) -> usize {
        self.regions.iter().map(|r| r.count).sum()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Generation(m.into()));
        if !self.regions.iter().all(|r| r.bounds.is_valid()) {
            return bad("spawn region is empty or non-finite");
        }
        if let MotionModel::ConstantVelocity { min_speed, max_speed } = self.motion {
            if !(min_speed >= 0.0 && min_speed <= max_speed && max_speed.is_finite()) {
                return bad("speed range must satisfy 0 <= min <= max");
            }
        }
        let d = self.dims;
        for (lo, hi) in [d.length, d.width, d.height] {
            if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                return bad("dimension ranges must be positive and ordered");
            }
        }
        if !(self.clearance >= 0.0 && self.clearance.is_finite()) {
            return bad("clearance must be non-negative");
        }
        if self.max_retries == 0 {
            return bad("max_retries must be positive");
        }
        Ok(())
    }
}

/// Places the objects by rejection sampling. A candidate is accepted only if
/// at every frame it stays inside the bounds and keeps `clearance` from
/// every occluder, every agent and every previously placed object.
pub fn generate_layout(seed: u64, params: &ScenarioParams) -> Result<ScenarioLayout> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let times: Vec<u64> = (0..params.frames as u64).map(|k| k * params.frame_interval_ms).collect();
    let margin = params.clearance;
    let occluders: Vec<[Vec2; 4]> = params
        .occluders
        .iter()
        .map(|o| rect_corners(Vec2::new(o.x, o.y), o.length + margin, o.width + margin, o.yaw))
        .collect();
    let mut objects: Vec<ObjectState> = Vec::with_capacity(params.object_count());
    for region in &params.regions {
        for _ in 0..region.count {
            let mut placed = false;
            for _ in 0..params.max_retries {
                let cand = sample_object(&mut rng, region.bounds, params);
                if fits(&cand, &objects, &occluders, &times, params) {
                    objects.push(cand);
                    placed = true;
                    break;
                }
            }
            if !placed {
                return Err(Error::Generation(format!(
                    "could not place object {} after {} attempts",
                    objects.len(),
                    params.max_retries
                )));
            }
        }
    }
    let layout = ScenarioLayout {
        frames: params.frames,
        frame_interval_ms: params.frame_interval_ms,
        test_ego: params.test_ego,
        bounds: params.bounds,
        sensor: params.sensor.clone(),
        agents: params.agents.clone(),
        occluders: params.occluders.clone(),
        objects,
    };
    layout.validate().map_err(|e| Error::Generation(e.to_string()))?;
    Ok(layout)
}

pub fn generate_scenario(seed: u64, params: &ScenarioParams) -> Result<Scenario> {
    simulate(&generate_layout(seed, params)?)
}

fn sample_object(rng: &mut ChaCha8Rng, region: Bounds, params: &ScenarioParams) -> ObjectState {
    let d = params.dims;
    let x = rng.gen_range(region.x.0..=region.x.1);
    let y = rng.gen_range(region.y.0..=region.y.1);
    let yaw = rng.gen_range(-PI..PI);
    let l = rng.gen_range(d.length.0..=d.length.1);
    let w = rng.gen_range(d.width.0..=d.width.1);
    let h = rng.gen_range(d.height.0..=d.height.1);
    let speed = match params.motion {
        MotionModel::Static => 0.0,
        MotionModel::ConstantVelocity { min_speed, max_speed } => rng.gen_range(min_speed..=max_speed),
    };
    ObjectState {
        x,
        y,
        h,
        w,
        l,
        yaw,
        vx: speed * yaw.cos(),
        vy: speed * yaw.sin(),
    }
}

fn fits(
    cand: &ObjectState,
    placed: &[ObjectState],
    occluders: &[[Vec2; 4]],
    times: &[u64],
    params: &ScenarioParams,
) -> bool {
    let m = params.clearance;
    times.iter().all(|&t| {
        let b = cand.at(t);
        let tight = b.corners();
        let padded = rect_corners(b.center(), b.l + m, b.w + m, b.yaw);
        tight.iter().all(|&p| params.bounds.contains(p))
            && occluders.iter().all(|o| !convex_overlap(o, &tight))
            && params.agents.iter().all(|a| {
                let s = a.pose.position();
                let pad = rect_corners(s, 2.0 * m.max(1.0), 2.0 * m.max(1.0), 0.0);
                !convex_overlap(&pad, &padded)
            })
            && placed.iter().all(|o| !convex_overlap(&o.at(t).corners(), &padded))
    })
}

//! Named scene layouts. Each returns generation parameters; object
//! placement still depends on the seed.
//!
//! The occlusion layouts put the test ego at the origin behind a wall whose
//! shadow covers a spawn region that two other agents look into. Agents
//! face along x so the long side of every grid spans the scene.

use std::f64::consts::{FRAC_PI_2, PI};

use super::{AgentKind, AgentSpec, Bounds, DimRanges, MotionModel, Occluder, ScenarioParams, SensorParams, SpawnRegion};
use crate::comm::Pose;
use crate::error::{config, Result};
use crate::AgentId;

pub const PRESET_NAMES: [&str; 4] = ["occlusion", "moving", "single", "urban"];

pub fn by_name(name: &str) -> Result<ScenarioParams> {
    match name {
        "occlusion" => Ok(occlusion()),
        "moving" => Ok(moving()),
        "single" => Ok(single()),
        "urban" => Ok(urban()),
        other => Err(config("preset", format!("unknown preset `{other}`; expected one of {PRESET_NAMES:?}"))),
    }
}

fn agent(id: u32, kind: AgentKind, x: f64, y: f64, heading: f64) -> AgentSpec {
    AgentSpec {
        id: AgentId(id),
        kind,
        pose: Pose { x, y, heading },
    }
}

fn region(x: (f64, f64), y: (f64, f64), count: usize) -> SpawnRegion {
    SpawnRegion {
        bounds: Bounds { x, y },
        count,
    }
}

fn base() -> ScenarioParams {
    ScenarioParams {
        frames: 5,
        frame_interval_ms: 100,
        bounds: Bounds {
            x: (-60.0, 60.0),
            y: (-38.0, 38.0),
        },
        regions: Vec::new(),
        agents: vec![agent(0, AgentKind::Vehicle, 0.0, 0.0, 0.0)],
        test_ego: AgentId(0),
        occluders: Vec::new(),
        motion: MotionModel::Static,
        dims: DimRanges::default(),
        sensor: SensorParams::default(),
        clearance: 1.0,
        max_retries: 5000,
    }
}

/// Three agents, a wall east of the ego, five objects in its shadow and
/// five in the open to the west. Static.
pub fn occlusion() -> ScenarioParams {
    ScenarioParams {
        regions: vec![region((17.0, 40.0), (-7.0, 7.0), 5), region((-40.0, -6.0), (-14.0, 14.0), 5)],
        agents: vec![
            agent(0, AgentKind::Vehicle, 0.0, 0.0, 0.0),
            agent(1, AgentKind::Vehicle, 32.0, 16.0, PI),
            agent(2, AgentKind::Roadside, 32.0, -16.0, 0.0),
        ],
        occluders: vec![Occluder {
            x: 11.0,
            y: 0.0,
            length: 2.0,
            width: 18.0,
            yaw: 0.0,
        }],
        ..base()
    }
}

/// The occlusion layout with objects driving at 3 to 8 m/s.
pub fn moving() -> ScenarioParams {
    ScenarioParams {
        frames: 12,
        motion: MotionModel::ConstantVelocity {
            min_speed: 3.0,
            max_speed: 8.0,
        },
        ..occlusion()
    }
}

/// Ego alone with a handful of objects.
pub fn single() -> ScenarioParams {
    ScenarioParams {
        regions: vec![region((-30.0, 30.0), (-20.0, 20.0), 6)],
        ..base()
    }
}

/// Four agents (one roadside), three buildings, sixteen moving objects.
pub fn urban() -> ScenarioParams {
    ScenarioParams {
        frames: 20,
        regions: vec![region((-55.0, 55.0), (-35.0, 35.0), 16)],
        agents: vec![
            agent(0, AgentKind::Vehicle, 0.0, 0.0, 0.0),
            agent(1, AgentKind::Vehicle, 30.0, 20.0, FRAC_PI_2),
            agent(2, AgentKind::Vehicle, -28.0, -18.0, 0.0),
            agent(3, AgentKind::Roadside, 22.0, -22.0, 0.0),
        ],
        occluders: vec![
            Occluder { x: 12.0, y: 8.0, length: 8.0, width: 6.0, yaw: 0.0 },
            Occluder { x: -15.0, y: 10.0, length: 10.0, width: 5.0, yaw: 0.4 },
            Occluder { x: 5.0, y: -20.0, length: 6.0, width: 10.0, yaw: 0.0 },
        ],
        motion: MotionModel::ConstantVelocity {
            min_speed: 0.0,
            max_speed: 10.0,
        },
        ..base()
    }
}

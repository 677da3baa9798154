//! TOML scenario files.
//!
//! ```toml
//! format = "semdb-scenario"
//! version = 1
//! frames = 10
//! frame_interval_ms = 100
//! test_ego = 0
//! bounds = { x = [-60.0, 60.0], y = [-40.0, 40.0] }
//!
//! [sensor]
//! angular_res_deg = 0.5
//! range = 80.0
//! beam_heights = [0.4, 0.9, 1.4]
//! intensity = 0.5
//!
//! [[agent]]
//! id = 0
//! kind = "vehicle"   # or "roadside"
//! x = 0.0
//! y = 0.0
//! heading = 0.0
//!
//! [[occluder]]
//! x = 12.0
//! y = 0.0
//! length = 2.0
//! width = 16.0
//! yaw = 0.0
//!
//! [[object]]          # state at t = 0; velocity in m/s
//! x = 20.0
//! y = 1.0
//! h = 1.6
//! w = 1.9
//! l = 4.5
//! yaw = 0.0
//! vx = 5.0
//! vy = 0.0
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AgentKind, AgentSpec, Bounds, ObjectState, Occluder, ScenarioLayout, SensorParams};
use crate::comm::Pose;
use crate::error::{Error, Result};
use crate::AgentId;

pub const FORMAT_NAME: &str = "semdb-scenario";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    format: String,
    version: u32,
    frames: usize,
    frame_interval_ms: u64,
    test_ego: u32,
    bounds: Bounds,
    #[serde(default)]
    sensor: SensorParams,
    #[serde(default, rename = "agent")]
    agents: Vec<AgentRecord>,
    #[serde(default, rename = "occluder")]
    occluders: Vec<Occluder>,
    #[serde(default, rename = "object")]
    objects: Vec<ObjectState>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AgentRecord {
    id: u32,
    kind: AgentKind,
    x: f64,
    y: f64,
    heading: f64,
}

pub fn parse_layout(text: &str) -> Result<ScenarioLayout> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| Error::ScenarioFormat(e.to_string()))?;
    if file.format != FORMAT_NAME {
        return Err(Error::ScenarioFormat(format!("unknown format `{}`", file.format)));
    }
    if file.version != FORMAT_VERSION {
        return Err(Error::ScenarioFormat(format!("unsupported version {}", file.version)));
    }
    let agents = file
        .agents
        .into_iter()
        .map(|a| {
            Ok(AgentSpec {
                id: AgentId(a.id),
                kind: a.kind,
                pose: Pose::new(a.x, a.y, a.heading).map_err(|e| Error::ScenarioFormat(e.to_string()))?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let layout = ScenarioLayout {
        frames: file.frames,
        frame_interval_ms: file.frame_interval_ms,
        test_ego: AgentId(file.test_ego),
        bounds: file.bounds,
        sensor: file.sensor,
        agents,
        occluders: file.occluders,
        objects: file.objects,
    };
    layout.validate()?;
    Ok(layout)
}

pub fn write_layout(layout: &ScenarioLayout) -> Result<String> {
    let file = ScenarioFile {
        format: FORMAT_NAME.into(),
        version: FORMAT_VERSION,
        frames: layout.frames,
        frame_interval_ms: layout.frame_interval_ms,
        test_ego: layout.test_ego.0,
        bounds: layout.bounds,
        sensor: layout.sensor.clone(),
        agents: layout
            .agents
            .iter()
            .map(|a| AgentRecord {
                id: a.id.0,
                kind: a.kind,
                x: a.pose.x,
                y: a.pose.y,
                heading: a.pose.heading,
            })
            .collect(),
        occluders: layout.occluders.clone(),
        objects: layout.objects.clone(),
    };
    toml::to_string(&file).map_err(|e| Error::ScenarioFormat(e.to_string()))
}

pub fn load_layout(path: &Path) -> Result<ScenarioLayout> {
    parse_layout(&std::fs::read_to_string(path)?)
}

pub fn save_layout(layout: &ScenarioLayout, path: &Path) -> Result<()> {
    std::fs::write(path, write_layout(layout)?)?;
    Ok(())
}

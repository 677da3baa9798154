//! Object-level motion compensation for heuristic codes.
//!
//! Within each sender's stream, SemDBs from consecutive frames are chained
//! by nearest-neighbour association, a constant velocity is fitted to each
//! chain, and every member is moved forward to the present. Ages come from
//! the time-encoding slots, so without encoding nothing moves.

use serde::{Deserialize, Serialize};

use super::rte::TimeUnit;
use crate::comm::Pose;
use crate::extractor::code::age_readout;
use crate::extractor::{BoxCode, SemDb};
use crate::geometry::Vec2;
use crate::sparse::VoxelSpec;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlignParams {
    pub frame_interval_ms: u64,
    pub unit: TimeUnit,
    /// Upper bound on object speed, m/s; gates association and caps fitted
    /// velocities.
    pub max_speed: f64,
    /// Association slack on top of the speed bound, metres.
    pub gate_slack: f64,
    /// Weight factor per frame of age. Extrapolated positions get worse
    /// with age, so older copies count for less.
    pub age_decay: f64,
}

impl AlignParams {
    pub fn new(frame_interval_ms: u64, unit: TimeUnit) -> Self {
        Self {
            frame_interval_ms,
            unit,
            max_speed: 15.0,
            gate_slack: 0.75,
            age_decay: 0.8,
        }
    }

    fn age_frames(&self, feature: &[f64]) -> f64 {
        let a = age_readout(feature);
        match self.unit {
            TimeUnit::Frames => a,
            TimeUnit::Milliseconds => a / self.frame_interval_ms as f64,
        }
    }
}

struct Track {
    /// Indices into the input, newest first.
    members: Vec<usize>,
}

/// Moves each SemDB (and its encoded position) along its chain's fitted
/// velocity to the present and scales it by `age_decay^age`. Order and
/// count are preserved.
pub fn align_motion(semdbs: &[SemDb], spec: &VoxelSpec, ego: &Pose, params: &AlignParams) -> Vec<SemDb> {
    let n = semdbs.len();
    let age: Vec<f64> = semdbs.iter().map(|s| params.age_frames(&s.feature)).collect();
    let world: Vec<Option<Vec2>> = semdbs
        .iter()
        .map(|s| BoxCode::read(&s.feature).map(|(c, _)| Vec2::new(c.x, c.y)))
        .collect();
    let secs_per_frame = params.frame_interval_ms as f64 / 1000.0;
    let mut out = semdbs.to_vec();

    let mut agents: Vec<_> = semdbs.iter().map(|s| s.source_agent).collect();
    agents.sort();
    agents.dedup();
    for agent in agents {
        // Frames of this agent, newest first, keyed by rounded age.
        let mut idx: Vec<usize> = (0..n)
            .filter(|&i| semdbs[i].source_agent == agent && world[i].is_some())
            .collect();
        idx.sort_by(|&a, &b| age[a].total_cmp(&age[b]).then(a.cmp(&b)));
        let mut frames: Vec<Vec<usize>> = Vec::new();
        for i in idx {
            match frames.last_mut() {
                Some(f) if (age[f[0]] - age[i]).abs() < 1e-6 => f.push(i),
                _ => frames.push(vec![i]),
            }
        }
        if frames.len() < 2 {
            continue;
        }

        let mut tracks: Vec<Track> = frames[0].iter().map(|&i| Track { members: vec![i] }).collect();
        for frame in &frames[1..] {
            let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
            for (t, track) in tracks.iter().enumerate() {
                let tail = *track.members.last().unwrap();
                let gap = age[frame[0]] - age[tail];
                let gate = params.max_speed * gap * secs_per_frame + params.gate_slack;
                for (k, &i) in frame.iter().enumerate() {
                    let d = (world[i].unwrap() - world[tail].unwrap()).norm();
                    if d <= gate {
                        pairs.push((d, t, k));
                    }
                }
            }
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
            let mut track_used = vec![false; tracks.len()];
            let mut det_used = vec![false; frame.len()];
            for (_, t, k) in pairs {
                if !track_used[t] && !det_used[k] {
                    track_used[t] = true;
                    det_used[k] = true;
                    tracks[t].members.push(frame[k]);
                }
            }
            for (k, &i) in frame.iter().enumerate() {
                if !det_used[k] {
                    tracks.push(Track { members: vec![i] });
                }
            }
        }

        for track in tracks.iter().filter(|t| t.members.len() >= 2) {
            let Some(v) = fit_velocity(&track.members, &age, &world) else {
                continue;
            };
            let speed = v.norm() / secs_per_frame;
            let v = if speed > params.max_speed { v * (params.max_speed / speed) } else { v };
            for &i in &track.members {
                let shift = v * age[i];
                BoxCode::shift(&mut out[i].feature, shift.x, shift.y);
                let local = shift.rotate(-ego.heading);
                out[i].position.0 += local.y / spec.voxel_size.1;
                out[i].position.1 += local.x / spec.voxel_size.0;
            }
        }
    }
    for (s, &a) in out.iter_mut().zip(&age) {
        let k = params.age_decay.powf(a);
        s.feature.iter_mut().for_each(|f| *f *= k);
    }
    out
}

/// Least-squares world velocity in metres per frame, time running as
/// `-age`.
fn fit_velocity(members: &[usize], age: &[f64], world: &[Option<Vec2>]) -> Option<Vec2> {
    let m = members.len() as f64;
    let t_mean = members.iter().map(|&i| -age[i]).sum::<f64>() / m;
    let p_mean = members.iter().fold(Vec2::new(0.0, 0.0), |acc, &i| acc + world[i].unwrap()) * (1.0 / m);
    let mut stt = 0.0;
    let mut stp = Vec2::new(0.0, 0.0);
    for &i in members {
        let dt = -age[i] - t_mean;
        stt += dt * dt;
        stp = stp + (world[i].unwrap() - p_mean) * dt;
    }
    (stt > 1e-12).then(|| stp * (1.0 / stt))
}

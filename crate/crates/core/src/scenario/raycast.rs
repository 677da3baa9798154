use crate::comm::Pose;
use crate::fusion::DetectionBox;
use crate::geometry::{ray_segment, Vec2};
use crate::sparse::Point;

use super::{Occluder, SensorParams};

/// One return plus the object it came from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanHit {
    /// Local to the scanning agent.
    pub point: Point,
    pub object: usize,
}

enum Surface {
    Object(usize),
    Occluder,
}

/// 2D ray cast from `pose`: each ray stops at the nearest edge among the
/// objects and occluders. Rays ending on an object yield one point per beam
/// height below the object's top.
pub fn scan(pose: &Pose, objects: &[DetectionBox], occluders: &[Occluder], sensor: &SensorParams) -> Vec<ScanHit> {
    let mut edges: Vec<(Vec2, Vec2, Surface)> = Vec::new();
    for (i, b) in objects.iter().enumerate() {
        let c = b.corners();
        for k in 0..4 {
            edges.push((c[k], c[(k + 1) % 4], Surface::Object(i)));
        }
    }
    for o in occluders {
        let c = o.corners();
        for k in 0..4 {
            edges.push((c[k], c[(k + 1) % 4], Surface::Occluder));
        }
    }
    let origin = pose.position();
    let n = sensor.rays();
    let mut hits = Vec::new();
    for i in 0..n {
        let theta = pose.heading + (i as f64 * sensor.angular_res_deg).to_radians();
        let dir = Vec2::new(theta.cos(), theta.sin());
        let mut best: Option<(f64, &Surface)> = None;
        for (a, b, s) in &edges {
            if let Some(t) = ray_segment(origin, dir, *a, *b) {
                if t <= sensor.range && best.is_none_or(|(bt, _)| t < bt) {
                    best = Some((t, s));
                }
            }
        }
        if let Some((t, Surface::Object(k))) = best {
            let local = pose.to_local(origin + dir * t);
            for &z in sensor.beam_heights.iter().filter(|&&z| z <= objects[*k].h) {
                hits.push(ScanHit {
                    point: Point {
                        x: local.x,
                        y: local.y,
                        z,
                        intensity: sensor.intensity,
                    },
                    object: *k,
                });
            }
        }
    }
    hits
}

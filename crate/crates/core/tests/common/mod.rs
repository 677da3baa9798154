//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use semdb_core::comm::Pose;
use semdb_core::extractor::{ExtractContext, SemDb};
use semdb_core::fusion::DetectionBox;
use semdb_core::scenario::{AgentKind, AgentSpec, Bounds, ObjectState, Occluder, ScenarioLayout, SensorParams};
use semdb_core::sparse::{Cell, ConvKernel, DenseGrid, SparseGrid};
use semdb_core::AgentId;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random stride-1 grid of the given size with roughly `density` occupancy.
pub fn random_grid(rng: &mut ChaCha8Rng, h: usize, w: usize, channels: usize, density: f64) -> SparseGrid {
    let mut entries = Vec::new();
    for r in 0..h {
        for c in 0..w {
            if rng.gen_bool(density) {
                let f = (0..channels).map(|_| rng.gen_range(-2.0..2.0)).collect();
                entries.push((Cell::new(r as u32, c as u32), f));
            }
        }
    }
    SparseGrid::from_entries((h, w), 1, channels, entries).unwrap()
}

/// Dense zero-padded convolution of a dense input, evaluated at every output
/// cell. Output extent is `ceil(h / stride) x ceil(w / stride)`.
pub fn dense_conv(input: &DenseGrid, kernel: &ConvKernel) -> DenseGrid {
    let s = kernel.stride() as usize;
    let k = kernel.size();
    let half = (k / 2) as i64;
    let oh = input.height.div_ceil(s);
    let ow = input.width.div_ceil(s);
    let mut out = DenseGrid::zeros(oh, ow, kernel.c_out());
    for r in 0..oh {
        for c in 0..ow {
            let mut acc: Vec<f64> = kernel.bias().to_vec();
            for dy in 0..k {
                for dx in 0..k {
                    let ir = (r * s) as i64 + dy as i64 - half;
                    let ic = (c * s) as i64 + dx as i64 - half;
                    if ir < 0 || ic < 0 || ir >= input.height as i64 || ic >= input.width as i64 {
                        continue;
                    }
                    let x = input.at(ir as usize, ic as usize);
                    for o in 0..kernel.c_out() {
                        for i in 0..kernel.c_in() {
                            acc[o] += x[i] * kernel.weight(dy * k + dx, i, o);
                        }
                    }
                }
            }
            out.at_mut(r, c).copy_from_slice(&acc);
        }
    }
    out
}

/// Cells whose receptive field touches an active input cell, by brute force
/// over every output cell.
pub fn dense_active_set(input: &SparseGrid, kernel: &ConvKernel) -> Vec<Cell> {
    let s = kernel.stride() as i64;
    let k = kernel.size() as i64;
    let half = k / 2;
    let (h, w) = input.shape();
    let oh = h.div_ceil(s as usize);
    let ow = w.div_ceil(s as usize);
    let mut out = Vec::new();
    for r in 0..oh as i64 {
        for c in 0..ow as i64 {
            let touches = input.cells().iter().any(|cell| {
                let dr = cell.row as i64 - r * s + half;
                let dc = cell.col as i64 - c * s + half;
                (0..k).contains(&dr) && (0..k).contains(&dc)
            });
            if touches {
                out.push(Cell::new(r as u32, c as u32));
            }
        }
    }
    out
}

/// O(n * window^2) neighbourhood-argmax suppression with the documented
/// lexicographic tie-break.
pub fn brute_force_maxpool(cells: &[Cell], scores: &[f64], window: usize) -> Vec<Cell> {
    let half = (window / 2) as u32;
    let mut keep = Vec::new();
    for (i, &a) in cells.iter().enumerate() {
        let mut best = true;
        for (j, &b) in cells.iter().enumerate() {
            if i == j || a.row.abs_diff(b.row) > half || a.col.abs_diff(b.col) > half {
                continue;
            }
            if scores[j] > scores[i] || (scores[j] == scores[i] && (b.row, b.col) < (a.row, a.col)) {
                best = false;
                break;
            }
        }
        if best {
            keep.push(a);
        }
    }
    keep
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn car(x: f64, y: f64, yaw: f64) -> ObjectState {
    ObjectState {
        x,
        y,
        h: 1.6,
        w: 1.9,
        l: 4.5,
        yaw,
        vx: 0.0,
        vy: 0.0,
    }
}

pub fn vehicle(id: u32, x: f64, y: f64, heading: f64) -> AgentSpec {
    AgentSpec {
        id: AgentId(id),
        kind: AgentKind::Vehicle,
        pose: Pose::new(x, y, heading).unwrap(),
    }
}

/// Open 120 x 80 m scene, single frame, ego 0 at the origin.
pub fn layout(agents: Vec<AgentSpec>, occluders: Vec<Occluder>, objects: Vec<ObjectState>) -> ScenarioLayout {
    ScenarioLayout {
        frames: 1,
        frame_interval_ms: 100,
        test_ego: AgentId(0),
        bounds: Bounds {
            x: (-60.0, 60.0),
            y: (-40.0, 40.0),
        },
        sensor: SensorParams::default(),
        agents,
        occluders,
        objects,
    }
}

pub fn ctx(agent: u32, pose: Pose, timestamp_ms: u64) -> ExtractContext {
    ExtractContext {
        agent: AgentId(agent),
        timestamp_ms,
        pose,
    }
}

/// SemDBs whose values are all exactly representable as f32.
pub fn random_semdbs(rng: &mut ChaCha8Rng, n: usize, channels: usize, agent: u32, timestamp_ms: u64) -> Vec<SemDb> {
    (0..n)
        .map(|_| SemDb {
            position: (rng.gen_range(0.0f32..200.0) as f64, rng.gen_range(0.0f32..700.0) as f64),
            confidence: rng.gen_range(0.0f32..=1.0) as f64,
            feature: (0..channels).map(|_| rng.gen_range(-5.0f32..5.0) as f64).collect(),
            source_agent: AgentId(agent),
            timestamp_ms,
        })
        .collect()
}

pub fn bev(x: f64, y: f64, l: f64, w: f64, yaw: f64, confidence: f64) -> DetectionBox {
    DetectionBox {
        x,
        y,
        z: 0.8,
        h: 1.6,
        w,
        l,
        yaw,
        confidence,
    }
}

fn inside(b: &DetectionBox, px: f64, py: f64) -> bool {
    let (s, c) = b.yaw.sin_cos();
    let (dx, dy) = (px - b.x, py - b.y);
    let u = dx * c + dy * s;
    let v = -dx * s + dy * c;
    u.abs() <= b.l / 2.0 && v.abs() <= b.w / 2.0
}

/// Monte-Carlo BEV IoU from uniform samples over a square covering both
/// boxes.
pub fn mc_iou(a: &DetectionBox, b: &DetectionBox, samples: usize, rng: &mut ChaCha8Rng) -> f64 {
    let ra = a.l.hypot(a.w) / 2.0;
    let rb = b.l.hypot(b.w) / 2.0;
    let (x0, x1) = ((a.x - ra).min(b.x - rb), (a.x + ra).max(b.x + rb));
    let (y0, y1) = ((a.y - ra).min(b.y - rb), (a.y + ra).max(b.y + rb));
    let (mut both, mut either) = (0usize, 0usize);
    for _ in 0..samples {
        let px = rng.gen_range(x0..x1);
        let py = rng.gen_range(y0..y1);
        let (ia, ib) = (inside(a, px, py), inside(b, px, py));
        both += (ia && ib) as usize;
        either += (ia || ib) as usize;
    }
    if either == 0 {
        0.0
    } else {
        both as f64 / either as f64
    }
}

/// Proper crossing of segments `p0p1` and `q0q1`, by orientation signs.
pub fn crosses(p0: (f64, f64), p1: (f64, f64), q0: (f64, f64), q1: (f64, f64)) -> bool {
    let orient = |a: (f64, f64), b: (f64, f64), c: (f64, f64)| (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0);
    let d1 = orient(q0, q1, p0);
    let d2 = orient(q0, q1, p1);
    let d3 = orient(p0, p1, q0);
    let d4 = orient(p0, p1, q1);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

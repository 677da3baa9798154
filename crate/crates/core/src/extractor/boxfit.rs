//! Point clustering and rectangle fitting for the heuristic head.

use std::f64::consts::FRAC_PI_2;

use crate::geometry::{normalize_angle, Vec2};
use crate::sparse::{Cell, PointCloud, VoxelSpec};

/// Typical passenger car, used for extents the sensor could not see.
pub const PRIOR_LENGTH: f64 = 4.5;
pub const PRIOR_WIDTH: f64 = 1.95;
pub const PRIOR_HEIGHT: f64 = 1.6;
/// A visible face at least this long is taken to be a long side.
const LONG_FACE: f64 = 2.6;
const COARSE_STEPS: usize = 90;
const FINE_STEPS: usize = 40;
const CLOSENESS_FLOOR: f64 = 0.01;
/// Cells at Chebyshev distance up to this belong to the same cluster.
pub const CLUSTER_LINK: u32 = 2;

/// Occupied base cells grouped into connected clusters.
#[derive(Clone, Debug)]
pub struct Clusters {
    shape: (usize, usize),
    /// Cluster id per base cell, `u32::MAX` when empty.
    labels: Vec<u32>,
    /// Point count per base cell.
    counts: Vec<u32>,
    /// Local-frame `(x, y, z)` per cluster.
    members: Vec<Vec<[f64; 3]>>,
}

impl Clusters {
    pub fn build(cloud: &PointCloud, spec: &VoxelSpec) -> Self {
        let shape = spec.shape();
        let mut counts = vec![0u32; shape.0 * shape.1];
        let mut binned: Vec<(usize, [f64; 3])> = Vec::new();
        for p in &cloud.points {
            if let Some(c) = spec.cell_at(p.x, p.y, 1) {
                let i = c.row as usize * shape.1 + c.col as usize;
                counts[i] += 1;
                binned.push((i, [p.x, p.y, p.z]));
            }
        }

        let mut parent: Vec<usize> = (0..counts.len()).collect();
        fn root(parent: &mut [usize], mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        let link = CLUSTER_LINK as i64;
        for r in 0..shape.0 {
            for c in 0..shape.1 {
                let i = r * shape.1 + c;
                if counts[i] == 0 {
                    continue;
                }
                // Forward half of the neighbourhood is enough for union-find.
                for dr in 0..=link {
                    for dc in -link..=link {
                        if dr == 0 && dc <= 0 {
                            continue;
                        }
                        let Some(n) = Cell::new(r as u32, c as u32).offset(dr, dc, shape) else {
                            continue;
                        };
                        let j = n.row as usize * shape.1 + n.col as usize;
                        if counts[j] > 0 {
                            let (a, b) = (root(&mut parent, i), root(&mut parent, j));
                            if a != b {
                                parent[a.max(b)] = a.min(b);
                            }
                        }
                    }
                }
            }
        }

        // Number clusters in scan order so ids are deterministic.
        let mut labels = vec![u32::MAX; counts.len()];
        let mut id_of_root = vec![u32::MAX; counts.len()];
        let mut next = 0u32;
        for i in 0..counts.len() {
            if counts[i] == 0 {
                continue;
            }
            let r = root(&mut parent, i);
            if id_of_root[r] == u32::MAX {
                id_of_root[r] = next;
                next += 1;
            }
            labels[i] = id_of_root[r];
        }
        let mut members = vec![Vec::new(); next as usize];
        for (i, p) in binned {
            members[labels[i] as usize].push(p);
        }
        Self {
            shape,
            labels,
            counts,
            members,
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn count(&self, cell: Cell) -> u32 {
        self.counts[cell.row as usize * self.shape.1 + cell.col as usize]
    }

    pub fn label(&self, cell: Cell) -> Option<u32> {
        let l = self.labels[cell.row as usize * self.shape.1 + cell.col as usize];
        (l != u32::MAX).then_some(l)
    }

    pub fn points(&self, id: u32) -> &[[f64; 3]] {
        &self.members[id as usize]
    }

    /// Cluster with the most points among base cells with
    /// `row0 <= row < row0 + size` and likewise for columns; ties go to the
    /// lower id.
    pub fn dominant_in(&self, row0: i64, col0: i64, size: i64) -> Option<u32> {
        let mut tally: Vec<(u32, u32)> = Vec::new();
        for r in row0.max(0)..(row0 + size).min(self.shape.0 as i64) {
            for c in col0.max(0)..(col0 + size).min(self.shape.1 as i64) {
                let i = r as usize * self.shape.1 + c as usize;
                let l = self.labels[i];
                if l == u32::MAX {
                    continue;
                }
                match tally.iter_mut().find(|(id, _)| *id == l) {
                    Some((_, n)) => *n += self.counts[i],
                    None => tally.push((l, self.counts[i])),
                }
            }
        }
        tally
            .into_iter()
            .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
            .map(|(id, _)| id)
    }
}

/// Rectangle in the sensor's local frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FittedBox {
    pub center: Vec2,
    pub length: f64,
    pub width: f64,
    pub height: f64,
    /// Heading of the length axis, radians.
    pub yaw: f64,
}

/// Fits a box to surface points seen from a sensor at the origin.
///
/// The orientation maximises the closeness of points to the nearest edge of
/// their bounding rectangle; extents the sensor could not see are filled
/// from the priors, growing away from the sensor.
pub fn fit_box(points: &[[f64; 3]]) -> Option<FittedBox> {
    if points.is_empty() {
        return None;
    }
    let max_z = points.iter().map(|p| p[2]).fold(f64::MIN, f64::max);
    let height = PRIOR_HEIGHT.max(max_z + 0.1);
    let xy: Vec<Vec2> = points.iter().map(|p| Vec2::new(p[0], p[1])).collect();

    let coarse = FRAC_PI_2 / COARSE_STEPS as f64;
    let mut best = (f64::MIN, 0.0);
    for step in 0..COARSE_STEPS {
        let theta = step as f64 * coarse;
        let score = closeness(&xy, theta);
        if score > best.0 {
            best = (score, theta);
        }
    }
    let centre = best.1;
    for step in 0..=FINE_STEPS {
        let theta = centre - coarse + step as f64 * 2.0 * coarse / FINE_STEPS as f64;
        let score = closeness(&xy, theta);
        if score > best.0 {
            best = (score, theta);
        }
    }
    let theta = best.1;
    let (e1, e2) = axes(theta);
    let (lo1, hi1) = extent(&xy, e1);
    let (lo2, hi2) = extent(&xy, e2);
    let (ext1, ext2) = (hi1 - lo1, hi2 - lo2);

    // Decide which axis runs along the car.
    let first_is_long = if ext1.max(ext2) >= LONG_FACE {
        ext1 >= ext2
    } else if ext1.min(ext2) < 0.5 {
        // A single short face is a front or rear.
        ext1 < ext2
    } else {
        ext1 >= ext2
    };
    let (len_dim, wid_dim) = (PRIOR_LENGTH, PRIOR_WIDTH);
    let (d1, d2) = if first_is_long {
        (ext1.max(len_dim), ext2.max(wid_dim))
    } else {
        (ext1.max(wid_dim), ext2.max(len_dim))
    };
    let c1 = complete(lo1, hi1, d1);
    let c2 = complete(lo2, hi2, d2);
    let center = e1 * c1 + e2 * c2;
    let (length, width, yaw) = if first_is_long {
        (d1, d2, theta)
    } else {
        (d2, d1, theta + FRAC_PI_2)
    };
    Some(FittedBox {
        center,
        length,
        width,
        height,
        yaw: normalize_angle(yaw),
    })
}

fn axes(theta: f64) -> (Vec2, Vec2) {
    let (s, c) = theta.sin_cos();
    (Vec2::new(c, s), Vec2::new(-s, c))
}

fn extent(points: &[Vec2], axis: Vec2) -> (f64, f64) {
    points.iter().fold((f64::MAX, f64::MIN), |(lo, hi), p| {
        let v = p.dot(axis);
        (lo.min(v), hi.max(v))
    })
}

fn closeness(points: &[Vec2], theta: f64) -> f64 {
    let (e1, e2) = axes(theta);
    let (lo1, hi1) = extent(points, e1);
    let (lo2, hi2) = extent(points, e2);
    points
        .iter()
        .map(|p| {
            let (a, b) = (p.dot(e1), p.dot(e2));
            let d1 = (a - lo1).min(hi1 - a);
            let d2 = (b - lo2).min(hi2 - b);
            1.0 / d1.min(d2).max(CLOSENESS_FLOOR)
        })
        .sum()
}

/// Centre along one axis of an interval `[lo, hi]` grown to length `dim`.
/// The sensor sits at coordinate 0; the unseen part lies away from it.
fn complete(lo: f64, hi: f64, dim: f64) -> f64 {
    let missing = dim - (hi - lo);
    if missing <= 0.0 {
        return 0.5 * (lo + hi);
    }
    if lo >= 0.0 {
        lo + 0.5 * dim
    } else if hi <= 0.0 {
        hi - 0.5 * dim
    } else {
        0.5 * (lo + hi)
    }
}

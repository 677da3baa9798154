use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::grid::{Cell, SparseGrid};
use crate::error::{contract, Result};

/// One LiDAR return: metric coordinates plus intensity in `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub intensity: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    pub points: Vec<Point>,
}

impl PointCloud {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        let cloud = Self { points };
        cloud.validate()?;
        Ok(cloud)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, p) in self.points.iter().enumerate() {
            if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
                return Err(contract(format!("point {i} has non-finite coordinates")));
            }
            if !(0.0..=1.0).contains(&p.intensity) {
                return Err(contract(format!("point {i} intensity {} outside [0,1]", p.intensity)));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Metric extent and cell size of the stride-1 BEV grid.
///
/// Rows run along y, columns along x. A real-valued base index `(r, c)` sits
/// at metric `(x_min + (c + 0.5) dx, y_min + (r + 0.5) dy)`, so integer
/// indices land on cell centres.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VoxelSpec {
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub voxel_size: (f64, f64),
}

impl Default for VoxelSpec {
    fn default() -> Self {
        Self {
            x_range: (-140.8, 140.8),
            y_range: (-40.0, 40.0),
            voxel_size: (0.4, 0.4),
        }
    }
}

impl VoxelSpec {
    pub fn new(x_range: (f64, f64), y_range: (f64, f64), voxel_size: (f64, f64)) -> Result<Self> {
        let spec = Self {
            x_range,
            y_range,
            voxel_size,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.x_range.0,
            self.x_range.1,
            self.y_range.0,
            self.y_range.1,
            self.voxel_size.0,
            self.voxel_size.1,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite || self.x_range.1 <= self.x_range.0 || self.y_range.1 <= self.y_range.0 {
            return Err(contract("voxel ranges must be finite and non-degenerate"));
        }
        if self.voxel_size.0 <= 0.0 || self.voxel_size.1 <= 0.0 {
            return Err(contract("voxel size must be positive"));
        }
        Ok(())
    }

    /// `(H, W)` of the stride-1 grid.
    pub fn shape(&self) -> (usize, usize) {
        (
            ((self.y_range.1 - self.y_range.0) / self.voxel_size.1).ceil() as usize,
            ((self.x_range.1 - self.x_range.0) / self.voxel_size.0).ceil() as usize,
        )
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x_range.0 && x < self.x_range.1 && y >= self.y_range.0 && y < self.y_range.1
    }

    /// Cell of a metric position on the grid of the given stride.
    pub fn cell_at(&self, x: f64, y: f64, stride: u32) -> Option<Cell> {
        if !self.contains(x, y) {
            return None;
        }
        let s = stride as f64;
        let row = ((y - self.y_range.0) / (self.voxel_size.1 * s)).floor();
        let col = ((x - self.x_range.0) / (self.voxel_size.0 * s)).floor();
        let (h, w) = super::grid::level_shape(self.shape(), stride);
        if row < 0.0 || col < 0.0 || row as usize >= h || col as usize >= w {
            return None;
        }
        Some(Cell::new(row as u32, col as u32))
    }

    /// Metric centre of a cell on the grid of the given stride.
    pub fn cell_center(&self, cell: Cell, stride: u32) -> (f64, f64) {
        let s = stride as f64;
        (
            self.x_range.0 + (cell.col as f64 + 0.5) * s * self.voxel_size.0,
            self.y_range.0 + (cell.row as f64 + 0.5) * s * self.voxel_size.1,
        )
    }

    /// Real-valued base index `(row, col)` to metric `(x, y)`.
    pub fn index_to_metric(&self, row: f64, col: f64) -> (f64, f64) {
        (
            self.x_range.0 + (col + 0.5) * self.voxel_size.0,
            self.y_range.0 + (row + 0.5) * self.voxel_size.1,
        )
    }

    /// Metric `(x, y)` to real-valued base index `(row, col)`.
    pub fn metric_to_index(&self, x: f64, y: f64) -> (f64, f64) {
        (
            (y - self.y_range.0) / self.voxel_size.1 - 0.5,
            (x - self.x_range.0) / self.voxel_size.0 - 0.5,
        )
    }
}

/// Number of per-voxel statistics produced before any lift.
pub const VOXEL_STATS: usize = 5;

/// Per-voxel point aggregation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum VoxelEncoder {
    /// `[count, mean x-offset, mean y-offset, mean z, mean intensity]`, the
    /// offsets measured from the cell centre in metres.
    Stats,
    /// `Stats` followed by a fixed linear map to `channels` features. The
    /// `5 x channels` matrix is drawn uniformly from `[-1/sqrt(5), 1/sqrt(5)]`
    /// by a ChaCha8 generator seeded with `seed`.
    Lifted { channels: usize, seed: u64 },
}

impl VoxelEncoder {
    pub fn channels(&self) -> usize {
        match self {
            VoxelEncoder::Stats => VOXEL_STATS,
            VoxelEncoder::Lifted { channels, .. } => *channels,
        }
    }

    fn lift_matrix(channels: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bound = 1.0 / (VOXEL_STATS as f64).sqrt();
        (0..VOXEL_STATS * channels)
            .map(|_| rng.gen_range(-bound..=bound))
            .collect()
    }
}

/// Bins a cloud onto the stride-1 grid. Points outside the ranges are
/// dropped; an empty cloud gives an empty grid.
pub fn voxelize(cloud: &PointCloud, spec: &VoxelSpec, encoder: VoxelEncoder) -> Result<SparseGrid> {
    spec.validate()?;
    cloud.validate()?;
    if encoder.channels() == 0 {
        return Err(contract("encoder must produce at least one channel"));
    }
    let shape = spec.shape();

    let mut binned: Vec<(Cell, &Point)> = cloud
        .points
        .iter()
        .filter_map(|p| spec.cell_at(p.x, p.y, 1).map(|c| (c, p)))
        .collect();
    // Ordering inside a cell is fixed too, so sums do not depend on input order.
    binned.sort_by(|(ca, pa), (cb, pb)| {
        ca.cmp(cb)
            .then(pa.x.total_cmp(&pb.x))
            .then(pa.y.total_cmp(&pb.y))
            .then(pa.z.total_cmp(&pb.z))
            .then(pa.intensity.total_cmp(&pb.intensity))
    });

    let lift = match encoder {
        VoxelEncoder::Lifted { channels, seed } => Some((channels, VoxelEncoder::lift_matrix(channels, seed))),
        VoxelEncoder::Stats => None,
    };

    let mut cells = Vec::new();
    let mut features = Vec::new();
    let mut start = 0;
    while start < binned.len() {
        let cell = binned[start].0;
        let end = start + binned[start..].iter().take_while(|(c, _)| *c == cell).count();
        let (cx, cy) = spec.cell_center(cell, 1);
        let n = (end - start) as f64;
        let mut stats = [n, 0.0, 0.0, 0.0, 0.0];
        for (_, p) in &binned[start..end] {
            stats[1] += p.x - cx;
            stats[2] += p.y - cy;
            stats[3] += p.z;
            stats[4] += p.intensity;
        }
        for s in &mut stats[1..] {
            *s /= n;
        }
        cells.push(cell);
        match &lift {
            None => features.extend_from_slice(&stats),
            Some((ch, m)) => {
                let mut out = vec![0.0; *ch];
                for (i, s) in stats.iter().enumerate() {
                    for (o, w) in out.iter_mut().zip(&m[i * ch..(i + 1) * ch]) {
                        *o += s * w;
                    }
                }
                features.extend_from_slice(&out);
            }
        }
        start = end;
    }
    debug_assert!(cells.iter().all(|c| (c.row as usize) < shape.0 && (c.col as usize) < shape.1));
    Ok(SparseGrid::from_sorted_parts(shape, 1, encoder.channels(), cells, features))
}

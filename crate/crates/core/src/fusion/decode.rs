use serde::{Deserialize, Serialize};

use crate::comm::Pose;
use crate::error::{contract, Result};
use crate::extractor::{sigmoid, BoxCode};
use crate::geometry::{normalize_angle, rect_corners, Vec2};
use crate::sparse::{subm_conv, subm_maxpool_indices, Cell, ConvKernel, Score, SparseGrid, VoxelSpec};

/// 7-attribute box in some agent's local frame, plus a confidence.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionBox {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub h: f64,
    pub w: f64,
    pub l: f64,
    pub yaw: f64,
    pub confidence: f64,
}

impl DetectionBox {
    pub fn validate(&self) -> Result<()> {
        let all = [self.x, self.y, self.z, self.h, self.w, self.l, self.yaw, self.confidence];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(contract("box has non-finite attributes"));
        }
        if !(self.h > 0.0 && self.w > 0.0 && self.l > 0.0) {
            return Err(contract("box dimensions must be positive"));
        }
        if !(0.0..=1.0).contains(&self.confidence) {
            return Err(contract("box confidence outside [0,1]"));
        }
        Ok(())
    }

    pub fn center(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    /// Counter-clockwise BEV footprint.
    pub fn corners(&self) -> [Vec2; 4] {
        rect_corners(self.center(), self.l, self.w, self.yaw)
    }

    /// The same box expressed in another frame.
    pub fn transformed(&self, from: &Pose, to: &Pose) -> Self {
        let c = Pose::relative(from, to, self.center());
        Self {
            x: c.x,
            y: c.y,
            yaw: normalize_angle(self.yaw + from.heading - to.heading),
            ..*self
        }
    }
}

/// Decoded boxes plus the confidence of every fused cell.
#[derive(Clone, Debug, PartialEq)]
pub struct Decoded {
    pub boxes: Vec<DetectionBox>,
    pub cell_confidence: Vec<f64>,
}

/// The four seeded 1x1 decoding heads.
#[derive(Clone, Debug)]
pub struct DecodeHeads {
    /// One output, squashed by a sigmoid.
    pub confidence: ConvKernel,
    /// `(dx, dy, z)` in metres.
    pub center: ConvKernel,
    /// Log `(h, w, l)`.
    pub dims: ConvKernel,
    pub rotation: ConvKernel,
}

/// Threshold, max-pool on confidence, one box per surviving cell.
pub fn decode_seeded(
    h: &SparseGrid,
    heads: &DecodeHeads,
    spec: &VoxelSpec,
    tau: f64,
    window: usize,
) -> Result<Decoded> {
    let conf: Vec<f64> = subm_conv(h, &heads.confidence)?
        .features()
        .iter()
        .map(|&v| sigmoid(v))
        .collect();
    let center = subm_conv(h, &heads.center)?;
    let dims = subm_conv(h, &heads.dims)?;
    let rot = subm_conv(h, &heads.rotation)?;
    let kept: Vec<usize> = (0..h.len()).filter(|&i| conf[i] >= tau).collect();
    let scores: Vec<f64> = kept.iter().map(|&i| conf[i]).collect();
    let survivors = subm_maxpool_indices(&h.select(&kept), window, Score::External(&scores))?;
    let mut boxes = Vec::with_capacity(survivors.len());
    for j in survivors {
        let i = kept[j];
        let (cx, cy) = spec.cell_center(h.cells()[i], h.stride());
        let c = center.feature(i);
        let d = dims.feature(i);
        boxes.push(DetectionBox {
            x: cx + c[0],
            y: cy + c[1],
            z: c[2],
            h: d[0].exp(),
            w: d[1].exp(),
            l: d[2].exp(),
            yaw: normalize_angle(rot.feature(i)[0]),
            confidence: conf[i],
        });
    }
    Ok(Decoded {
        boxes,
        cell_confidence: conf,
    })
}

/// Code-reading decoder for heuristic features.
///
/// Each fused cell scores the summed code weight of the re-binned cells in
/// its 3x3 neighbourhood; after thresholding `1 - exp(-weight)` and
/// max-pooling, the heaviest re-binned cell in the window and its immediate
/// neighbours are summed and read back as one box in the ego frame.
pub fn decode_heuristic(
    h: &SparseGrid,
    revox: &SparseGrid,
    ego: &Pose,
    tau: f64,
    window: usize,
) -> Result<Decoded> {
    if !h.stride().is_multiple_of(revox.stride()) {
        return Err(contract("fused stride must be a multiple of the re-binned stride"));
    }
    let weights: Vec<f64> = (0..revox.len())
        .map(|i| BoxCode::read(revox.feature(i)).map_or(0.0, |(_, w)| w))
        .collect();
    let ratio = (h.stride() / revox.stride()) as i64;
    // Re-binned cells inside the fused cell's 3x3 neighbourhood.
    let members = |cell: Cell| -> Vec<usize> {
        let (r0, c0) = ((cell.row as i64 - 1) * ratio, (cell.col as i64 - 1) * ratio);
        let (r1, c1) = (r0 + 3 * ratio, c0 + 3 * ratio);
        let lo = revox.cells().partition_point(|c| (c.row as i64) < r0);
        revox.cells()[lo..]
            .iter()
            .enumerate()
            .take_while(|(_, c)| (c.row as i64) < r1)
            .filter(|(_, c)| (c.col as i64) >= c0 && (c.col as i64) < c1)
            .map(|(k, _)| lo + k)
            .collect()
    };

    let mut kept = Vec::new();
    let mut scores = Vec::new();
    let mut cell_confidence = Vec::with_capacity(h.len());
    for (i, &cell) in h.cells().iter().enumerate() {
        let w: f64 = members(cell).iter().map(|&k| weights[k]).sum();
        let conf = 1.0 - (-w).exp();
        cell_confidence.push(conf);
        if conf >= tau {
            kept.push(i);
            scores.push(w);
        }
    }
    let survivors = subm_maxpool_indices(&h.select(&kept), window, Score::External(&scores))?;

    let mut peaks: Vec<usize> = Vec::new();
    let mut boxes = Vec::new();
    for j in survivors {
        let cand = members(h.cells()[kept[j]]);
        let Some(&peak) = cand
            .iter()
            .max_by(|&&a, &&b| weights[a].total_cmp(&weights[b]).then(b.cmp(&a)))
        else {
            continue;
        };
        if peaks.contains(&peak) {
            continue;
        }
        peaks.push(peak);
        let pc = revox.cells()[peak];
        let mut sum = vec![0.0; revox.channels()];
        for (cell, f) in revox.iter() {
            if cell.chebyshev(pc) <= 1 {
                for (a, v) in sum.iter_mut().zip(f) {
                    *a += v;
                }
            }
        }
        let Some((code, weight)) = BoxCode::read(&sum) else {
            continue;
        };
        let c = ego.to_local(Vec2::new(code.x, code.y));
        boxes.push(DetectionBox {
            x: c.x,
            y: c.y,
            z: code.h / 2.0,
            h: code.h,
            w: code.w,
            l: code.l,
            yaw: ego.local_yaw(code.yaw),
            confidence: 1.0 - (-weight).exp(),
        });
    }
    Ok(Decoded {
        boxes,
        cell_confidence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transform_round_trip() {
        let b = DetectionBox { x: 3.0, y: -1.0, z: 0.8, h: 1.6, w: 1.9, l: 4.5, yaw: 0.3, confidence: 0.9 };
        let a = Pose::new(10.0, 5.0, 1.0).unwrap();
        let c = Pose::new(-4.0, 2.0, -2.5).unwrap();
        let back = b.transformed(&a, &c).transformed(&c, &a);
        assert!((back.x - b.x).abs() < 1e-12 && (back.y - b.y).abs() < 1e-12);
        assert!((back.yaw - b.yaw).abs() < 1e-12);
    }

    #[test]
    fn heuristic_decode_reads_single_code() {
        let spec = VoxelSpec::new((-20.0, 20.0), (-20.0, 20.0), (0.4, 0.4)).unwrap();
        let mut f = vec![0.0; 32];
        BoxCode { x: 4.3, y: -2.1, h: 1.5, w: 1.9, l: 4.4, yaw: 0.2 }.write(&mut f);
        let f: Vec<f64> = f.iter().map(|v| v * 0.9).collect();
        let cell = spec.cell_at(4.3, -2.1, 2).unwrap();
        let revox = SparseGrid::from_entries(spec.shape(), 2, 32, vec![(cell, f)]).unwrap();
        let hcell = spec.cell_at(4.3, -2.1, 4).unwrap();
        let h = SparseGrid::from_entries(
            spec.shape(),
            4,
            1,
            vec![(hcell, vec![0.0]), (Cell::new(hcell.row + 1, hcell.col), vec![0.0])],
        )
        .unwrap();
        let boxes = decode_heuristic(&h, &revox, &Pose::origin(), 0.3, 3).unwrap().boxes;
        assert_eq!(boxes.len(), 1);
        let b = boxes[0];
        assert!((b.x - 4.3).abs() < 1e-9 && (b.y + 2.1).abs() < 1e-9);
        assert!((b.l - 4.4).abs() < 1e-9 && (b.yaw - 0.2).abs() < 1e-9);
        assert!((b.confidence - (1.0 - (-0.9f64).exp())).abs() < 1e-12);
    }
}

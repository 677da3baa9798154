use crate::error::{contract, Result};
use crate::extractor::SemDb;
use crate::sparse::{subm_conv, subm_maxpool_indices, ConvKernel, Score, SparseGrid};
use crate::AgentId;

use super::boxfit::Clusters;

/// Stride of the grid the heads run on.
pub const HEAD_STRIDE: u32 = 4;
/// Point-count scale of the heuristic confidence `1 - exp(-n / kappa)`.
pub const KAPPA: f64 = 4.0;

/// Per-cell head outputs aligned with the fused grid's active cells.
#[derive(Clone, Debug, PartialEq)]
pub struct HeadOutputs {
    pub confidence: Vec<f64>,
    /// `(d_row, d_col)` in base-grid cells.
    pub deviation: Vec<(f64, f64)>,
    /// Max-pool ranking; strictly increasing in `confidence`.
    pub score: Vec<f64>,
    /// Dominant point cluster per cell (heuristic heads only).
    pub cluster: Vec<Option<u32>>,
}

impl HeadOutputs {
    pub fn len(&self) -> usize {
        self.confidence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.confidence.is_empty()
    }
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Learned-style heads: 1x1 confidence (sigmoid) and deviation (linear)
/// projections.
pub fn seeded_heads(fused: &SparseGrid, conf: &ConvKernel, dev: &ConvKernel) -> Result<HeadOutputs> {
    check_stride(fused)?;
    let c = subm_conv(fused, conf)?;
    let d = subm_conv(fused, dev)?;
    let confidence: Vec<f64> = c.features().iter().map(|&v| sigmoid(v)).collect();
    Ok(HeadOutputs {
        score: confidence.clone(),
        confidence,
        deviation: d.features().chunks_exact(2).map(|v| (v[0], v[1])).collect(),
        cluster: vec![None; fused.len()],
    })
}

/// Occupancy heads: `n` is the number of points in the 3x3 neighbourhood of
/// stride-4 cells around each fused cell; the deviation points at the centre
/// returned by `center_of` for the cluster holding most of those points.
pub fn heuristic_heads(
    fused: &SparseGrid,
    clusters: &Clusters,
    mut center_of: impl FnMut(u32) -> Option<(f64, f64)>,
) -> Result<HeadOutputs> {
    check_stride(fused)?;
    let s = HEAD_STRIDE as i64;
    let (h4, w4) = fused.shape();
    let (hb, wb) = fused.base_shape();
    // Point count per stride-4 cell.
    let mut coarse = vec![0u64; h4 * w4];
    for r in 0..hb {
        for c in 0..wb {
            let n = clusters.count(crate::sparse::Cell::new(r as u32, c as u32));
            if n > 0 {
                coarse[(r / HEAD_STRIDE as usize) * w4 + c / HEAD_STRIDE as usize] += n as u64;
            }
        }
    }
    let mut out = HeadOutputs {
        confidence: Vec::with_capacity(fused.len()),
        deviation: Vec::with_capacity(fused.len()),
        score: Vec::with_capacity(fused.len()),
        cluster: Vec::with_capacity(fused.len()),
    };
    for &cell in fused.cells() {
        let mut n = 0u64;
        for dr in -1..=1 {
            for dc in -1..=1 {
                if let Some(nb) = cell.offset(dr, dc, (h4, w4)) {
                    n += coarse[nb.row as usize * w4 + nb.col as usize];
                }
            }
        }
        let base = (cell.row as i64 * s, cell.col as i64 * s);
        let cluster = if n > 0 {
            clusters.dominant_in(base.0 - s, base.1 - s, 3 * s)
        } else {
            None
        };
        let deviation = cluster
            .and_then(&mut center_of)
            .map(|(r, c)| (r - base.0 as f64, c - base.1 as f64))
            .unwrap_or((0.0, 0.0));
        out.confidence.push(1.0 - (-(n as f64) / KAPPA).exp());
        out.score.push(n as f64);
        out.deviation.push(deviation);
        out.cluster.push(cluster);
    }
    Ok(out)
}

fn check_stride(fused: &SparseGrid) -> Result<()> {
    if fused.stride() != HEAD_STRIDE {
        return Err(contract(format!("heads run at stride {HEAD_STRIDE}, got {}", fused.stride())));
    }
    Ok(())
}

/// Indices of fused cells kept by thresholding at `tau` and max-pool
/// suppression, ascending.
pub fn select(fused: &SparseGrid, heads: &HeadOutputs, tau: f64, window: usize) -> Result<Vec<usize>> {
    if heads.len() != fused.len() {
        return Err(contract("head outputs are not aligned with the fused grid"));
    }
    let kept: Vec<usize> = (0..fused.len()).filter(|&i| heads.confidence[i] >= tau).collect();
    let sub = fused.select(&kept);
    let scores: Vec<f64> = kept.iter().map(|&i| heads.score[i]).collect();
    let survivors = subm_maxpool_indices(&sub, window, Score::External(&scores))?;
    Ok(survivors.into_iter().map(|j| kept[j]).collect())
}

/// Builds SemDBs for the chosen cells: index `4 * (row, col) + deviation`,
/// feature optionally scaled by confidence.
pub fn refine(
    fused: &SparseGrid,
    heads: &HeadOutputs,
    chosen: &[usize],
    reweight: bool,
    agent: AgentId,
    timestamp_ms: u64,
) -> Vec<SemDb> {
    let s = fused.stride() as f64;
    chosen
        .iter()
        .map(|&i| {
            let cell = fused.cells()[i];
            let conf = heads.confidence[i];
            let (dr, dc) = heads.deviation[i];
            let mut feature = fused.feature(i).to_vec();
            if reweight {
                for v in &mut feature {
                    *v *= conf;
                }
            }
            SemDb {
                position: (s * cell.row as f64 + dr, s * cell.col as f64 + dc),
                confidence: conf,
                feature,
                source_agent: agent,
                timestamp_ms,
            }
        })
        .collect()
}

/// Threshold, suppress, adjust and re-weight.
pub fn select_and_refine(
    fused: &SparseGrid,
    heads: &HeadOutputs,
    tau: f64,
    window: usize,
    reweight: bool,
    agent: AgentId,
    timestamp_ms: u64,
) -> Result<Vec<SemDb>> {
    let chosen = select(fused, heads, tau, window)?;
    Ok(refine(fused, heads, &chosen, reweight, agent, timestamp_ms))
}

use std::cmp::Ordering;

use crate::error::{contract, Result};
use crate::extractor::SemDb;
use crate::sparse::{Cell, SparseGrid, VoxelSpec};

/// Result of binning SemDBs onto a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Revoxelized {
    pub grid: SparseGrid,
    /// SemDBs outside the grid.
    pub dropped: usize,
    /// SemDBs that landed in an already occupied cell.
    pub collisions: usize,
}

/// Total order used before any summation so that results do not depend on
/// arrival order.
pub fn canonical_order(a: &SemDb, b: &SemDb) -> Ordering {
    a.source_agent
        .cmp(&b.source_agent)
        .then(a.timestamp_ms.cmp(&b.timestamp_ms))
        .then(a.position.0.total_cmp(&b.position.0))
        .then(a.position.1.total_cmp(&b.position.1))
        .then(a.confidence.total_cmp(&b.confidence))
        .then_with(|| {
            a.feature
                .iter()
                .zip(&b.feature)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        })
}

/// Bins each SemDB by its metric position into a cell of the given stride
/// and sums features that share a cell.
pub fn re_voxelize(semdbs: &[SemDb], spec: &VoxelSpec, stride: u32, channels: usize) -> Result<Revoxelized> {
    let mut sorted: Vec<&SemDb> = semdbs.iter().collect();
    sorted.sort_by(|a, b| canonical_order(a, b));
    let mut binned: Vec<(Cell, &SemDb)> = Vec::with_capacity(sorted.len());
    let mut dropped = 0;
    for s in sorted {
        if s.feature.len() != channels {
            return Err(contract(format!("SemDB has {} channels, expected {channels}", s.feature.len())));
        }
        let (x, y) = spec.index_to_metric(s.position.0, s.position.1);
        match spec.cell_at(x, y, stride) {
            Some(c) => binned.push((c, s)),
            None => dropped += 1,
        }
    }
    // Stable, so the canonical order survives within a cell.
    binned.sort_by_key(|(c, _)| *c);

    let mut cells: Vec<Cell> = Vec::new();
    let mut features: Vec<f64> = Vec::new();
    for (cell, s) in &binned {
        if cells.last() == Some(cell) {
            let start = features.len() - channels;
            for (acc, v) in features[start..].iter_mut().zip(&s.feature) {
                *acc += v;
            }
        } else {
            cells.push(*cell);
            features.extend_from_slice(&s.feature);
        }
    }
    let collisions = binned.len() - cells.len();
    let entries = cells
        .into_iter()
        .zip(features.chunks_exact(channels).map(<[f64]>::to_vec))
        .collect();
    Ok(Revoxelized {
        grid: SparseGrid::from_entries(spec.shape(), stride, channels, entries)?,
        dropped,
        collisions,
    })
}

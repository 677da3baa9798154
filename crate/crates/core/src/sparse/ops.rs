use super::grid::{Cell, SparseGrid};
use crate::error::{contract, Result};

/// Where `subm_maxpool` reads each cell's score from.
#[derive(Clone, Copy, Debug)]
pub enum Score<'a> {
    /// Use this feature channel.
    Channel(usize),
    /// One score per active cell, aligned with `grid.cells()`.
    External(&'a [f64]),
}

/// Indices of the cells that survive submanifold max-pooling.
///
/// A cell survives iff no other active cell inside its `window x window`
/// neighbourhood has a higher score, or an equal score at a lexicographically
/// smaller `(row, col)`.
pub fn subm_maxpool_indices(input: &SparseGrid, window: usize, score: Score<'_>) -> Result<Vec<usize>> {
    if window < 3 || window.is_multiple_of(2) {
        return Err(contract(format!("max-pool window {window} must be odd and >= 3")));
    }
    let scores: Vec<f64> = match score {
        Score::Channel(ch) => {
            if ch >= input.channels() {
                return Err(contract(format!("score channel {ch} out of range")));
            }
            (0..input.len()).map(|i| input.feature(i)[ch]).collect()
        }
        Score::External(s) => {
            if s.len() != input.len() {
                return Err(contract("external score count differs from active count"));
            }
            s.to_vec()
        }
    };
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(contract("max-pool scores must be finite"));
    }

    let half = (window / 2) as i64;
    let shape = input.shape();
    let mut keep = Vec::new();
    'cells: for (i, &cell) in input.cells().iter().enumerate() {
        for dr in -half..=half {
            for dc in -half..=half {
                if dr == 0 && dc == 0 {
                    continue;
                }
                let Some(n) = cell.offset(dr, dc, shape) else {
                    continue;
                };
                let Some(j) = input.find(n) else {
                    continue;
                };
                if scores[j] > scores[i] || (scores[j] == scores[i] && n < cell) {
                    continue 'cells;
                }
            }
        }
        keep.push(i);
    }
    Ok(keep)
}

/// Submanifold max-pooling used as sparse non-maximum suppression. Survivors
/// keep their features.
pub fn subm_maxpool(input: &SparseGrid, window: usize, score: Score<'_>) -> Result<SparseGrid> {
    let keep = subm_maxpool_indices(input, window, score)?;
    Ok(input.select(&keep))
}

/// Union of two grids; features add where both are active.
pub fn sparse_add(a: &SparseGrid, b: &SparseGrid) -> Result<SparseGrid> {
    if a.base_shape() != b.base_shape() || a.stride() != b.stride() || a.channels() != b.channels() {
        return Err(contract(format!(
            "sparse_add operands differ: base {:?}/{:?}, stride {}/{}, channels {}/{}",
            a.base_shape(),
            b.base_shape(),
            a.stride(),
            b.stride(),
            a.channels(),
            b.channels()
        )));
    }
    let ch = a.channels();
    let mut cells = Vec::with_capacity(a.len() + b.len());
    let mut features = Vec::with_capacity((a.len() + b.len()) * ch);
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let ca = a.cells().get(i);
        let cb = b.cells().get(j);
        match (ca, cb) {
            (Some(x), Some(y)) if x == y => {
                cells.push(*x);
                features.extend(a.feature(i).iter().zip(b.feature(j)).map(|(p, q)| p + q));
                i += 1;
                j += 1;
            }
            (Some(x), Some(y)) if x < y => {
                cells.push(*x);
                features.extend_from_slice(a.feature(i));
                i += 1;
            }
            (Some(x), None) => {
                cells.push(*x);
                features.extend_from_slice(a.feature(i));
                i += 1;
            }
            (_, Some(y)) => {
                cells.push(*y);
                features.extend_from_slice(b.feature(j));
                j += 1;
            }
            (None, None) => unreachable!(),
        }
    }
    Ok(SparseGrid::from_sorted_parts(a.base_shape(), a.stride(), ch, cells, features))
}

/// Moves every index to `(row * factor, col * factor)` on the `factor`-times
/// finer grid. Values are untouched.
pub fn index_upsample(input: &SparseGrid, factor: u32) -> Result<SparseGrid> {
    if !(factor == 2 || factor == 4) {
        return Err(contract(format!("upsample factor {factor} must be 2 or 4")));
    }
    if !input.stride().is_multiple_of(factor) {
        return Err(contract(format!(
            "stride {} not divisible by factor {factor}",
            input.stride()
        )));
    }
    let cells: Vec<Cell> = input
        .cells()
        .iter()
        .map(|c| Cell::new(c.row * factor, c.col * factor))
        .collect();
    Ok(SparseGrid::from_sorted_parts(
        input.base_shape(),
        input.stride() / factor,
        input.channels(),
        cells,
        input.features().to_vec(),
    ))
}

use std::fmt;

use crate::error::{contract, Result};

/// Integer 2D cell on a (possibly down-sampled) BEV grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cell {
    pub row: u32,
    pub col: u32,
}

impl Cell {
    pub const fn new(row: u32, col: u32) -> Self {
        Self { row, col }
    }

    /// Chebyshev (king-move) distance.
    pub fn chebyshev(self, other: Cell) -> u32 {
        self.row.abs_diff(other.row).max(self.col.abs_diff(other.col))
    }

    /// Cell shifted by a signed offset, or `None` when it leaves `shape`.
    pub fn offset(self, drow: i64, dcol: i64, shape: (usize, usize)) -> Option<Cell> {
        let r = self.row as i64 + drow;
        let c = self.col as i64 + dcol;
        if r < 0 || c < 0 || r >= shape.0 as i64 || c >= shape.1 as i64 {
            None
        } else {
            Some(Cell::new(r as u32, c as u32))
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

/// A 2D sparse feature map: sorted unique active cells, each carrying a
/// `channels`-wide feature vector.
///
/// Every grid remembers the shape of the stride-1 grid it derives from, so
/// grids at different strides of one pyramid agree on geometry. The shape at
/// the grid's own stride is `ceil(base / stride)` per axis.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseGrid {
    base_shape: (usize, usize),
    stride: u32,
    channels: usize,
    cells: Vec<Cell>,
    features: Vec<f64>,
}

pub(crate) fn level_shape(base: (usize, usize), stride: u32) -> (usize, usize) {
    let s = stride as usize;
    (base.0.div_ceil(s), base.1.div_ceil(s))
}

impl SparseGrid {
    pub fn empty(base_shape: (usize, usize), stride: u32, channels: usize) -> Self {
        assert!(stride > 0 && channels > 0, "stride and channels must be positive");
        Self {
            base_shape,
            stride,
            channels,
            cells: Vec::new(),
            features: Vec::new(),
        }
    }

    /// Builds a grid from `(cell, feature)` entries in any order.
    ///
    /// Rejects duplicate cells, out-of-bounds cells, wrong feature widths and
    /// non-finite values.
    pub fn from_entries(
        base_shape: (usize, usize),
        stride: u32,
        channels: usize,
        mut entries: Vec<(Cell, Vec<f64>)>,
    ) -> Result<Self> {
        if stride == 0 || channels == 0 {
            return Err(contract("stride and channel count must be positive"));
        }
        let shape = level_shape(base_shape, stride);
        entries.sort_by_key(|(c, _)| *c);
        let mut cells = Vec::with_capacity(entries.len());
        let mut features = Vec::with_capacity(entries.len() * channels);
        for (cell, feat) in entries {
            if cell.row as usize >= shape.0 || cell.col as usize >= shape.1 {
                return Err(contract(format!("cell {cell} outside grid {shape:?}")));
            }
            if cells.last() == Some(&cell) {
                return Err(contract(format!("duplicate cell {cell}")));
            }
            if feat.len() != channels {
                return Err(contract(format!(
                    "feature at {cell} has {} entries, expected {channels}",
                    feat.len()
                )));
            }
            if feat.iter().any(|v| !v.is_finite()) {
                return Err(contract(format!("non-finite feature at {cell}")));
            }
            cells.push(cell);
            features.extend_from_slice(&feat);
        }
        Ok(Self {
            base_shape,
            stride,
            channels,
            cells,
            features,
        })
    }

    /// Caller guarantees sorted unique in-bounds cells and matching features.
    pub(crate) fn from_sorted_parts(
        base_shape: (usize, usize),
        stride: u32,
        channels: usize,
        cells: Vec<Cell>,
        features: Vec<f64>,
    ) -> Self {
        debug_assert!(cells.windows(2).all(|w| w[0] < w[1]));
        debug_assert_eq!(cells.len() * channels, features.len());
        Self {
            base_shape,
            stride,
            channels,
            cells,
            features,
        }
    }

    pub fn base_shape(&self) -> (usize, usize) {
        self.base_shape
    }

    /// Grid extent `(H, W)` in cells at this grid's stride.
    pub fn shape(&self) -> (usize, usize) {
        level_shape(self.base_shape, self.stride)
    }

    pub fn stride(&self) -> u32 {
        self.stride
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn feature(&self, i: usize) -> &[f64] {
        &self.features[i * self.channels..(i + 1) * self.channels]
    }

    pub fn find(&self, cell: Cell) -> Option<usize> {
        self.cells.binary_search(&cell).ok()
    }

    pub fn get(&self, cell: Cell) -> Option<&[f64]> {
        self.find(cell).map(|i| self.feature(i))
    }

    pub fn iter(&self) -> impl Iterator<Item = (Cell, &[f64])> + '_ {
        self.cells
            .iter()
            .copied()
            .zip(self.features.chunks_exact(self.channels))
    }

    /// Same active set, features rewritten cell by cell.
    pub fn map_features<F>(&self, channels: usize, mut f: F) -> Self
    where
        F: FnMut(Cell, &[f64], &mut [f64]),
    {
        let mut out = vec![0.0; self.cells.len() * channels];
        for (i, &cell) in self.cells.iter().enumerate() {
            f(cell, self.feature(i), &mut out[i * channels..(i + 1) * channels]);
        }
        Self::from_sorted_parts(self.base_shape, self.stride, channels, self.cells.clone(), out)
    }

    /// Keeps the entries whose index is in `keep` (ascending).
    pub(crate) fn select(&self, keep: &[usize]) -> Self {
        let mut cells = Vec::with_capacity(keep.len());
        let mut features = Vec::with_capacity(keep.len() * self.channels);
        for &i in keep {
            cells.push(self.cells[i]);
            features.extend_from_slice(self.feature(i));
        }
        Self::from_sorted_parts(self.base_shape, self.stride, self.channels, cells, features)
    }

    /// Dense `H x W x C` copy; inactive cells are zero vectors.
    pub fn densify(&self) -> DenseGrid {
        let (h, w) = self.shape();
        let mut dense = DenseGrid::zeros(h, w, self.channels);
        for (cell, f) in self.iter() {
            dense
                .at_mut(cell.row as usize, cell.col as usize)
                .copy_from_slice(f);
        }
        dense
    }

    /// Sparse view of a dense array; cells whose vector is exactly zero are
    /// dropped.
    pub fn sparsify(dense: &DenseGrid, base_shape: (usize, usize), stride: u32) -> Result<Self> {
        if level_shape(base_shape, stride) != (dense.height, dense.width) {
            return Err(contract("dense extent does not match base shape / stride"));
        }
        let mut cells = Vec::new();
        let mut features = Vec::new();
        for r in 0..dense.height {
            for c in 0..dense.width {
                let v = dense.at(r, c);
                if v.iter().any(|x| *x != 0.0) {
                    cells.push(Cell::new(r as u32, c as u32));
                    features.extend_from_slice(v);
                }
            }
        }
        Ok(Self::from_sorted_parts(
            base_shape,
            stride,
            dense.channels,
            cells,
            features,
        ))
    }
}

/// Row-major dense `H x W x C` array, used by oracles and tests.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseGrid {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl DenseGrid {
    pub fn zeros(height: usize, width: usize, channels: usize) -> Self {
        Self {
            height,
            width,
            channels,
            data: vec![0.0; height * width * channels],
        }
    }

    pub fn at(&self, r: usize, c: usize) -> &[f64] {
        let o = (r * self.width + c) * self.channels;
        &self.data[o..o + self.channels]
    }

    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut [f64] {
        let o = (r * self.width + c) * self.channels;
        &mut self.data[o..o + self.channels]
    }
}

//! Sparse BEV tensors and the operators built on them.
//!
//! Every operator is a pure function of its inputs and emits cells in
//! ascending `(row, col)` order.

mod conv;
mod grid;
mod ops;
mod voxel;

pub use conv::{sparse_conv, subm_conv, ConvKernel};
pub use grid::{Cell, DenseGrid, SparseGrid};
pub use ops::{index_upsample, sparse_add, subm_maxpool, subm_maxpool_indices, Score};
pub use voxel::{voxelize, Point, PointCloud, VoxelEncoder, VoxelSpec, VOXEL_STATS};

//! Receiver side: temporal encoding, re-binning, fusion and box decoding.
mod align;
mod buffer;
mod decode;
mod fuser;
mod revoxel;
pub mod rte;

pub use align::{align_motion, AlignParams};
pub use buffer::{SenderFrame, TemporalBuffer};
pub use decode::{decode_heuristic, decode_seeded, DecodeHeads, Decoded, DetectionBox};
pub use fuser::{Fuser, FusionConfig, FusionOutput};
pub use revoxel::{canonical_order, re_voxelize, Revoxelized};
pub use rte::{apply_rte, frequency, rte_vector, RteSpec, TimeUnit, RTE_BASE};

//! Detection metrics and training losses.
mod ap;
mod iou;
mod loss;

pub use ap::{average_precision, match_detections, ApResult, MatchResult};
pub use iou::{bev_area, rotated_iou};
pub use loss::{focal_loss, l1_loss, total_loss, LOSS_EPS, REG_WEIGHT};

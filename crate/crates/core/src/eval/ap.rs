use serde::{Deserialize, Serialize};

use super::iou::rotated_iou;
use crate::error::Result;
use crate::fusion::DetectionBox;

/// One-to-one assignment of detections to ground truth within a frame.
#[derive(Clone, Debug, PartialEq)]
pub struct MatchResult {
    /// Per detection, the matched gt index.
    pub matched: Vec<Option<usize>>,
    pub covered: Vec<bool>,
    /// Per detection, IoU with its match (0 when unmatched).
    pub ious: Vec<f64>,
}

/// Greedy matching in descending confidence: each detection takes the
/// unmatched gt with the highest IoU (lowest index on ties) if that IoU
/// reaches `iou_thresh`.
pub fn match_detections(dets: &[DetectionBox], gts: &[DetectionBox], iou_thresh: f64) -> Result<MatchResult> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| dets[b].confidence.total_cmp(&dets[a].confidence).then(a.cmp(&b)));
    let mut matched = vec![None; dets.len()];
    let mut covered = vec![false; gts.len()];
    let mut ious = vec![0.0; dets.len()];
    for d in order {
        let mut best: Option<(usize, f64)> = None;
        for (g, gt) in gts.iter().enumerate() {
            if covered[g] {
                continue;
            }
            let iou = rotated_iou(&dets[d], gt)?;
            if iou >= iou_thresh && best.is_none_or(|(_, b)| iou > b) {
                best = Some((g, iou));
            }
        }
        if let Some((g, iou)) = best {
            covered[g] = true;
            matched[d] = Some(g);
            ious[d] = iou;
        }
    }
    Ok(MatchResult { matched, covered, ious })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApResult {
    /// `None` when there is no ground truth at all.
    pub ap: Option<f64>,
    pub gt_count: usize,
    pub detections: usize,
    pub true_positives: usize,
}

/// All-point interpolated AP over a set of frames, each given as
/// `(detections, ground truth)`.
pub fn average_precision(frames: &[(&[DetectionBox], &[DetectionBox])], iou_thresh: f64) -> Result<ApResult> {
    let mut ranked: Vec<(f64, usize, usize, bool)> = Vec::new();
    let mut gt_count = 0;
    for (f, (dets, gts)) in frames.iter().enumerate() {
        gt_count += gts.len();
        let m = match_detections(dets, gts, iou_thresh)?;
        for (d, det) in dets.iter().enumerate() {
            ranked.push((det.confidence, f, d, m.matched[d].is_some()));
        }
    }
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let true_positives = ranked.iter().filter(|r| r.3).count();
    let detections = ranked.len();
    if gt_count == 0 {
        return Ok(ApResult { ap: None, gt_count, detections, true_positives });
    }

    let mut recall = Vec::with_capacity(detections);
    let mut precision = Vec::with_capacity(detections);
    let mut tp = 0usize;
    for (k, r) in ranked.iter().enumerate() {
        tp += r.3 as usize;
        recall.push(tp as f64 / gt_count as f64);
        precision.push(tp as f64 / (k + 1) as f64);
    }
    for k in (0..precision.len().saturating_sub(1)).rev() {
        precision[k] = precision[k].max(precision[k + 1]);
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for (r, p) in recall.iter().zip(&precision) {
        ap += (r - prev_recall) * p;
        prev_recall = *r;
    }
    Ok(ApResult { ap: Some(ap), gt_count, detections, true_positives })
}

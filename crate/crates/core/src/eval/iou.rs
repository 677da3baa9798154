use std::cmp::Ordering;

use crate::error::{contract, Result};
use crate::fusion::DetectionBox;
use crate::geometry::{clip_convex, polygon_area};

/// Footprint area, or a contract error for a degenerate box.
pub fn bev_area(b: &DetectionBox) -> Result<f64> {
    let finite = [b.x, b.y, b.w, b.l, b.yaw].iter().all(|v| v.is_finite());
    if !finite || !(b.w > 0.0 && b.l > 0.0) {
        return Err(contract("box has a degenerate footprint"));
    }
    Ok(b.w * b.l)
}

/// Bird's-eye-view IoU of two yaw-rotated rectangles.
///
/// The clip is always done in the same argument order regardless of how the
/// caller passes the boxes, so the result is exactly symmetric.
pub fn rotated_iou(a: &DetectionBox, b: &DetectionBox) -> Result<f64> {
    let (area_a, area_b) = (bev_area(a)?, bev_area(b)?);
    let (first, second) = match footprint_order(a, b) {
        Ordering::Equal => return Ok(1.0),
        Ordering::Greater => (b, a),
        Ordering::Less => (a, b),
    };
    let inter = polygon_area(&clip_convex(&first.corners(), &second.corners())).max(0.0);
    let union = area_a + area_b - inter;
    Ok((inter / union).clamp(0.0, 1.0))
}

fn footprint_order(a: &DetectionBox, b: &DetectionBox) -> Ordering {
    [a.x, a.y, a.l, a.w, a.yaw]
        .iter()
        .zip([b.x, b.y, b.l, b.w, b.yaw])
        .map(|(p, q)| p.total_cmp(&q))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bx(x: f64, y: f64, l: f64, w: f64, yaw: f64) -> DetectionBox {
        DetectionBox { x, y, z: 0.5, h: 1.0, w, l, yaw, confidence: 1.0 }
    }

    #[test]
    fn analytic_cases() {
        let a = bx(1.0, 2.0, 4.0, 2.0, 0.3);
        assert_eq!(rotated_iou(&a, &a).unwrap(), 1.0);
        assert_eq!(rotated_iou(&a, &bx(20.0, 2.0, 4.0, 2.0, 0.3)).unwrap(), 0.0);
        // Shifted by half the length: overlap 2x2 out of 4x2 + 4x2 - 4.
        let half = rotated_iou(&bx(0.0, 0.0, 4.0, 2.0, 0.0), &bx(2.0, 0.0, 4.0, 2.0, 0.0)).unwrap();
        assert!((half - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn rotated_unit_squares() {
        // Intersection is a regular octagon of area 2(sqrt2 - 1).
        let inter = 2.0 * (2f64.sqrt() - 1.0);
        let expect = inter / (2.0 - inter);
        let got = rotated_iou(&bx(0.0, 0.0, 1.0, 1.0, 0.0), &bx(0.0, 0.0, 1.0, 1.0, std::f64::consts::FRAC_PI_4)).unwrap();
        assert!((got - expect).abs() < 1e-12, "{got}");
    }

    #[test]
    fn degenerate_is_rejected() {
        assert!(rotated_iou(&bx(0.0, 0.0, 0.0, 1.0, 0.0), &bx(0.0, 0.0, 1.0, 1.0, 0.0)).is_err());
    }
}

//! Fixed feature layout written by the heuristic head.
//!
//! The heuristic detector has no learned decoder, so it stores a box
//! estimate in reserved channels of the SemDB feature. Every value sits in
//! the sine slot of a low-frequency encoding pair, so the time encoding added
//! later only nudges it by `sin(w_k dt)`; the pair-8 slots stay zero at
//! extraction and afterwards hold the pure encoding, which is what
//! [`age_readout`] and [`BoxCode::read`] use to undo that nudge.
//!
//! Positions and yaw are world-referenced so that summing codes from
//! different senders stays meaningful.

use crate::fusion::rte::frequency;
use crate::geometry::normalize_angle;

/// Smallest feature width that holds the layout.
pub const CODE_MIN_CHANNELS: usize = 32;
pub const AGE_PAIR: usize = 8;
pub const AGE_SIN: usize = 2 * AGE_PAIR;
pub const AGE_COS: usize = AGE_SIN + 1;
/// Channels below this index carry backbone features.
pub const BACKBONE_CHANNELS: usize = 14;

pub const WEIGHT: usize = 30;
pub const POS_X: usize = 18;
pub const POS_Y: usize = 20;
pub const LN_H: usize = 22;
pub const LN_W: usize = 24;
pub const LN_L: usize = 26;
pub const SIN_2YAW: usize = 28;
pub const COS_2YAW: usize = 14;

const SLOTS: [usize; 8] = [COS_2YAW, POS_X, POS_Y, LN_H, LN_W, LN_L, SIN_2YAW, WEIGHT];
const POS_SCALE: f64 = 64.0;

/// World-frame box estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoxCode {
    pub x: f64,
    pub y: f64,
    pub h: f64,
    pub w: f64,
    pub l: f64,
    pub yaw: f64,
}

impl BoxCode {
    /// Writes the code with unit weight; the rest of `feature` is untouched
    /// except the age slots, which are zeroed.
    pub fn write(&self, feature: &mut [f64]) {
        assert!(feature.len() >= CODE_MIN_CHANNELS);
        feature[AGE_SIN] = 0.0;
        feature[AGE_COS] = 0.0;
        feature[WEIGHT] = 1.0;
        feature[POS_X] = self.x / POS_SCALE;
        feature[POS_Y] = self.y / POS_SCALE;
        feature[LN_H] = self.h.ln();
        feature[LN_W] = self.w.ln();
        feature[LN_L] = self.l.ln();
        let (s, c) = (2.0 * self.yaw).sin_cos();
        feature[SIN_2YAW] = s;
        feature[COS_2YAW] = c;
    }

    /// Weight-normalised code of a (possibly summed) feature, or `None` when
    /// the weight is not positive.
    pub fn read(feature: &[f64]) -> Option<(BoxCode, f64)> {
        let f = debiased(feature);
        let weight = f[WEIGHT];
        if !(weight > 1e-9) {
            return None;
        }
        let code = BoxCode {
            x: f[POS_X] / weight * POS_SCALE,
            y: f[POS_Y] / weight * POS_SCALE,
            h: (f[LN_H] / weight).exp(),
            w: (f[LN_W] / weight).exp(),
            l: (f[LN_L] / weight).exp(),
            yaw: normalize_angle(0.5 * f[SIN_2YAW].atan2(f[COS_2YAW])),
        };
        Some((code, weight))
    }

    /// Moves the encoded position of a single weighted code by `(dx, dy)`
    /// metres.
    pub fn shift(feature: &mut [f64], dx: f64, dy: f64) {
        let weight = debiased(feature)[WEIGHT];
        feature[POS_X] += weight * dx / POS_SCALE;
        feature[POS_Y] += weight * dy / POS_SCALE;
    }
}

/// Code slots with the estimated time-encoding contribution removed.
///
/// For small angles `sin(w_k dt) ~ (w_k / w_8) sin(w_8 dt)`, and the age
/// slot holds the sum of `sin(w_8 dt)` over everything added into the cell.
fn debiased(feature: &[f64]) -> Vec<f64> {
    let d = feature.len();
    let s = feature[AGE_SIN];
    let mut f = feature.to_vec();
    if s != 0.0 {
        let w8 = frequency(AGE_PAIR, d);
        for &slot in &SLOTS {
            f[slot] -= frequency(slot / 2, d) / w8 * s;
        }
    }
    f
}

/// Age of a single encoded SemDB as recovered from the age slots, in the
/// unit the encoding used. Zero when no encoding was applied.
pub fn age_readout(feature: &[f64]) -> f64 {
    let (s, c) = (feature[AGE_SIN], feature[AGE_COS]);
    if s == 0.0 && c == 0.0 {
        return 0.0;
    }
    s.atan2(c).max(0.0) / frequency(AGE_PAIR, feature.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::rte::rte_vector;

    fn code() -> BoxCode {
        BoxCode {
            x: 12.5,
            y: -30.25,
            h: 1.6,
            w: 1.9,
            l: 4.4,
            yaw: 0.7,
        }
    }

    fn close(a: &BoxCode, b: &BoxCode, tol: f64) -> bool {
        (a.x - b.x).abs() < tol
            && (a.y - b.y).abs() < tol
            && (a.h - b.h).abs() < tol
            && (a.w - b.w).abs() < tol
            && (a.l - b.l).abs() < tol
            && normalize_angle(a.yaw - b.yaw).abs() < tol
    }

    #[test]
    fn write_read_round_trip_and_weighting() {
        let mut f = vec![0.3; 32];
        code().write(&mut f);
        let (back, w) = BoxCode::read(&f).unwrap();
        assert_eq!(w, 1.0);
        assert!(close(&back, &code(), 1e-12));
        let scaled: Vec<f64> = f.iter().map(|v| v * 0.4).collect();
        let (back, w) = BoxCode::read(&scaled).unwrap();
        assert!((w - 0.4).abs() < 1e-12);
        assert!(close(&back, &code(), 1e-12));
    }

    #[test]
    fn encoding_bias_is_removed() {
        let mut f = vec![0.0; 32];
        code().write(&mut f);
        let mut sum = vec![0.0; 32];
        for dt in [0.0, 3.0, 6.0] {
            for (s, (v, e)) in sum.iter_mut().zip(f.iter().zip(rte_vector(dt, 32))) {
                *s += v + e;
            }
        }
        let (back, w) = BoxCode::read(&sum).unwrap();
        assert!((w - 3.0).abs() < 1e-3);
        assert!(close(&back, &code(), 1e-3), "{back:?}");
    }

    #[test]
    fn age_is_recovered() {
        let mut f = vec![0.0; 32];
        code().write(&mut f);
        assert_eq!(age_readout(&f), 0.0);
        for dt in [0.0, 1.0, 4.0, 7.0] {
            let enc: Vec<f64> = f.iter().zip(rte_vector(dt, 32)).map(|(a, b)| a + b).collect();
            assert!((age_readout(&enc) - dt).abs() < 1e-9);
        }
    }

    #[test]
    fn yaw_is_direction_free() {
        let mut f = vec![0.0; 32];
        BoxCode { yaw: 0.7 + std::f64::consts::PI, ..code() }.write(&mut f);
        assert!((BoxCode::read(&f).unwrap().0.yaw - 0.7).abs() < 1e-12);
    }

    #[test]
    fn shift_moves_position_only() {
        let mut f = vec![0.0; 32];
        code().write(&mut f);
        let f: Vec<f64> = f.iter().map(|v| v * 0.5).collect();
        let mut g = f.clone();
        BoxCode::shift(&mut g, 1.5, -2.0);
        let (a, _) = BoxCode::read(&f).unwrap();
        let (b, _) = BoxCode::read(&g).unwrap();
        assert!((b.x - a.x - 1.5).abs() < 1e-12);
        assert!((b.y - a.y + 2.0).abs() < 1e-12);
        assert_eq!(a.l, b.l);
    }
}

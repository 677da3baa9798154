/// Probability clamp applied before any logarithm.
pub const LOSS_EPS: f64 = 1e-7;

/// Weight of the regression term in the total loss.
pub const REG_WEIGHT: f64 = 1.0;

/// `-alpha (1 - p_t)^gamma ln p_t` with `p_t = p` for a positive target and
/// `1 - p` otherwise. The same `alpha` is used for both classes.
pub fn focal_loss(pred: f64, target: bool, gamma: f64, alpha: f64) -> f64 {
    let p = pred.clamp(LOSS_EPS, 1.0 - LOSS_EPS);
    let pt = if target { p } else { 1.0 - p };
    -alpha * (1.0 - pt).powf(gamma) * pt.ln()
}

/// Mean absolute difference; zero for empty input.
pub fn l1_loss(pred: &[f64], target: &[f64]) -> f64 {
    assert_eq!(pred.len(), target.len(), "l1_loss length mismatch");
    if pred.is_empty() {
        return 0.0;
    }
    pred.iter().zip(target).map(|(p, t)| (p - t).abs()).sum::<f64>() / pred.len() as f64
}

pub fn total_loss(classification: f64, regression: f64) -> f64 {
    classification + REG_WEIGHT * regression
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_zero_is_cross_entropy() {
        for p in [0.1, 0.5, 0.93] {
            assert!((focal_loss(p, true, 0.0, 1.0) + p.ln()).abs() < 1e-12);
            assert!((focal_loss(p, false, 0.0, 1.0) + (1.0 - p).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn extreme_predictions_stay_finite() {
        assert!(focal_loss(0.0, true, 2.0, 0.25).is_finite());
        assert!(focal_loss(1.0, false, 2.0, 0.25).is_finite());
    }

    #[test]
    fn l1_of_equal_is_zero() {
        assert_eq!(l1_loss(&[1.0, -2.0], &[1.0, -2.0]), 0.0);
        assert_eq!(l1_loss(&[1.0, -2.0], &[0.0, 0.0]), 1.5);
    }
}

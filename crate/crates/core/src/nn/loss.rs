use crate::error::{Error, Result};

/// Clamp applied to predictions before taking logarithms.
pub const BCE_EPSILON: f64 = 1e-12;

/// Binary cross-entropy of one prediction against a 0/1 label.
///
/// Returns `(loss, dloss/dprediction)`. The derivative is evaluated at the
/// clamped prediction and passed straight through the clamp.
pub fn bce_loss(prediction: f64, label: f64) -> Result<(f64, f64)> {
    if label != 0.0 && label != 1.0 {
        return Err(Error::Invalid(format!("label must be 0 or 1, got {label}")));
    }
    let p = prediction.clamp(BCE_EPSILON, 1.0 - BCE_EPSILON);
    let loss = -(label * p.ln() + (1.0 - label) * (1.0 - p).ln());
    let grad = -label / p + (1.0 - label) / (1.0 - p);
    Ok((loss, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn confident_correct_prediction_is_nearly_free() {
        let (loss, _) = bce_loss(1.0, 1.0).unwrap();
        assert_eq!(loss, -(1.0 - BCE_EPSILON).ln());
        assert!(loss < 1e-11);
    }

    #[test]
    fn coin_flip_costs_ln2() {
        for y in [0.0, 1.0] {
            let (loss, _) = bce_loss(0.5, y).unwrap();
            assert!((loss - std::f64::consts::LN_2).abs() < 1e-15);
        }
    }

    #[test]
    fn gradient_matches_central_difference() {
        let h = 1e-6;
        let (_, g) = bce_loss(0.7, 1.0).unwrap();
        let fd = (bce_loss(0.7 + h, 1.0).unwrap().0 - bce_loss(0.7 - h, 1.0).unwrap().0) / (2.0 * h);
        assert!(((g - fd) / fd).abs() < 1e-6, "{g} vs {fd}");
    }

    #[test]
    fn rejects_soft_labels() {
        assert!(bce_loss(0.5, 0.3).is_err());
    }
}

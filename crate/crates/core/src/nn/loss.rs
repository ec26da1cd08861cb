use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Clamp applied to predictions before taking logarithms in BCE.
pub const BCE_EPSILON: f64 = 1e-7;

/// Training objective.
///
/// `Bce` trains and reports binary cross-entropy. `MseForRmse` trains on mean
/// squared error and reports its square root.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    #[default]
    Bce,
    MseForRmse,
}

fn check_lengths(predictions: &[f64], targets: &[f64]) -> Result<()> {
    if predictions.len() != targets.len() {
        return Err(Error::LengthMismatch {
            left: predictions.len(),
            right: targets.len(),
        });
    }
    if predictions.is_empty() {
        return Err(Error::InvalidConfig("loss over zero values".into()));
    }
    Ok(())
}

fn check_binary(targets: &[f64]) -> Result<()> {
    match targets.iter().find(|&&y| y != 0.0 && y != 1.0) {
        Some(&value) => Err(Error::InvalidBinaryTarget { value }),
        None => Ok(()),
    }
}

#[inline]
fn clamp_probability(p: f64) -> f64 {
    p.clamp(BCE_EPSILON, 1.0 - BCE_EPSILON)
}

pub fn bce(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    check_lengths(predictions, targets)?;
    check_binary(targets)?;
    let n = predictions.len() as f64;
    let sum: f64 = predictions
        .iter()
        .zip(targets)
        .map(|(&p, &y)| {
            let p = clamp_probability(p);
            y * p.ln() + (1.0 - y) * (1.0 - p).ln()
        })
        .sum();
    Ok(-sum / n)
}

pub fn mse(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    check_lengths(predictions, targets)?;
    let n = predictions.len() as f64;
    Ok(predictions
        .iter()
        .zip(targets)
        .map(|(p, y)| (p - y) * (p - y))
        .sum::<f64>()
        / n)
}

pub fn rmse(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    mse(predictions, targets).map(f64::sqrt)
}

/// Reported loss value: BCE, or RMSE for the regression kind.
pub fn loss(kind: LossKind, predictions: &[f64], targets: &[f64]) -> Result<f64> {
    match kind {
        LossKind::Bce => bce(predictions, targets),
        LossKind::MseForRmse => rmse(predictions, targets),
    }
}

/// The quantity actually minimized during training (BCE or MSE).
pub fn objective(kind: LossKind, predictions: &[f64], targets: &[f64]) -> Result<f64> {
    match kind {
        LossKind::Bce => bce(predictions, targets),
        LossKind::MseForRmse => mse(predictions, targets),
    }
}

/// d(objective)/d(prediction), elementwise. Targets are assumed validated.
pub(crate) fn objective_gradient(kind: LossKind, predictions: &[f64], targets: &[f64]) -> Vec<f64> {
    let n = predictions.len() as f64;
    predictions
        .iter()
        .zip(targets)
        .map(|(&p, &y)| match kind {
            LossKind::MseForRmse => 2.0 * (p - y) / n,
            LossKind::Bce => {
                if p <= BCE_EPSILON || p >= 1.0 - BCE_EPSILON {
                    // clamp is flat here
                    0.0
                } else {
                    (p - y) / (p * (1.0 - p) * n)
                }
            }
        })
        .collect()
}

pub(crate) fn validate_targets(kind: LossKind, targets: &[f64]) -> Result<()> {
    match kind {
        LossKind::Bce => check_binary(targets),
        LossKind::MseForRmse => match targets.iter().position(|v| !v.is_finite()) {
            Some(index) => Err(Error::NonFinite { index }),
            None => Ok(()),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn bce_perfect_prediction_is_near_zero() {
        let l = loss(LossKind::Bce, &[1.0 - BCE_EPSILON], &[1.0]).unwrap();
        assert!(l < 1e-6, "{l}");
    }

    #[test]
    fn bce_symmetric_half() {
        let l = loss(LossKind::Bce, &[0.5, 0.5], &[1.0, 0.0]).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn rmse_hand_value() {
        let l = loss(LossKind::MseForRmse, &[3.0, 4.0], &[0.0, 0.0]).unwrap();
        assert!((l - 12.5f64.sqrt()).abs() < 1e-12);
        assert!((l - 3.535534).abs() < 1e-6);
    }

    #[test]
    fn bce_clamps_extremes() {
        let l = bce(&[0.0, 1.0], &[0.0, 1.0]).unwrap();
        assert!(l.is_finite() && l < 1e-6);
        let wrong = bce(&[0.0], &[1.0]).unwrap();
        assert!((wrong - (-(BCE_EPSILON).ln())).abs() < 1e-9);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            loss(LossKind::Bce, &[0.5], &[0.5, 1.0]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            loss(LossKind::Bce, &[0.5], &[0.3]),
            Err(Error::InvalidBinaryTarget { .. })
        ));
        assert!(loss(LossKind::MseForRmse, &[], &[]).is_err());
    }

    proptest! {
        #[test]
        fn bce_nonnegative(
            pairs in proptest::collection::vec((0.0f64..=1.0, proptest::bool::ANY), 1..30)
        ) {
            let p: Vec<f64> = pairs.iter().map(|x| x.0).collect();
            let y: Vec<f64> = pairs.iter().map(|x| if x.1 { 1.0 } else { 0.0 }).collect();
            prop_assert!(bce(&p, &y).unwrap() >= 0.0);
        }

        #[test]
        fn rmse_zero_on_self_and_symmetric(
            a in proptest::collection::vec(-100.0f64..100.0, 1..20),
            shift in -5.0f64..5.0,
        ) {
            prop_assert_eq!(rmse(&a, &a).unwrap(), 0.0);
            let b: Vec<f64> = a.iter().map(|v| v + shift * v.sin()).collect();
            prop_assert_eq!(rmse(&a, &b).unwrap(), rmse(&b, &a).unwrap());
        }
    }
}

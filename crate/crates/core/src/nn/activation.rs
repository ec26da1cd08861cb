use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
    Identity,
}

/// Logistic function, evaluated in the numerically stable branch for each sign.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
pub fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => relu(x),
            Activation::Sigmoid => sigmoid(x),
            Activation::Identity => x,
        }
    }

    /// Derivative with respect to the pre-activation, given both `z` and `a = f(z)`.
    #[inline]
    pub fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Identity => 1.0,
        }
    }
}

/// Applies `kind` elementwise. Non-finite inputs are rejected.
pub fn activate(kind: Activation, x: &[f64]) -> Result<Vec<f64>> {
    if let Some(index) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    Ok(x.iter().map(|&v| kind.apply(v)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sigmoid_at_zero_is_half() {
        assert_eq!(activate(Activation::Sigmoid, &[0.0]).unwrap(), vec![0.5]);
    }

    #[test]
    fn relu_by_cases() {
        assert_eq!(
            activate(Activation::Relu, &[-3.0, 0.0, 2.0]).unwrap(),
            vec![0.0, 0.0, 2.0]
        );
    }

    #[test]
    fn sigmoid_of_ln3() {
        // 1 / (1 + e^{-ln 3}) = 1 / (1 + 1/3)
        let oracle = 1.0 / (1.0 + 1.0 / 3.0);
        let out = activate(Activation::Sigmoid, &[3f64.ln()]).unwrap();
        assert!((out[0] - oracle).abs() < 1e-15);
        assert!((out[0] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn identity_passthrough() {
        let x = [1.5, -2.0];
        assert_eq!(activate(Activation::Identity, &x).unwrap(), x.to_vec());
    }

    #[test]
    fn non_finite_rejected() {
        assert!(matches!(
            activate(Activation::Relu, &[1.0, f64::INFINITY]),
            Err(Error::NonFinite { index: 1 })
        ));
        assert!(activate(Activation::Sigmoid, &[f64::NAN]).is_err());
    }

    proptest! {
        #[test]
        fn sigmoid_bounded_and_symmetric(x in -30.0f64..30.0) {
            let s = sigmoid(x);
            prop_assert!(s > 0.0 && s < 1.0);
            prop_assert!((sigmoid(-x) - (1.0 - s)).abs() < 1e-12);
        }

        #[test]
        fn sigmoid_strictly_increasing(x in -20.0f64..20.0, dx in 1e-3f64..5.0) {
            prop_assert!(sigmoid(x + dx) > sigmoid(x));
        }

        #[test]
        fn relu_idempotent_nonnegative(xs in proptest::collection::vec(-1e6f64..1e6, 1..20)) {
            let once = activate(Activation::Relu, &xs).unwrap();
            let twice = activate(Activation::Relu, &once).unwrap();
            prop_assert_eq!(&once, &twice);
            prop_assert!(once.iter().all(|&v| v >= 0.0));
        }
    }
}

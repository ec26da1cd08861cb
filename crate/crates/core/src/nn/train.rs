use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::loss::{self, LossKind};
use super::matrix::Matrix;
use super::network::{DenseNet, Gradients, Mode};
use crate::error::{Error, Result};

/// Mini-batch SGD settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            learning_rate: 0.01,
            batch_size: 32,
            seed: 0,
            shuffle: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch size must be at least 1".into()));
        }
        // zero is allowed: it freezes the net and is useful as a control
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "learning rate {} must be finite and non-negative",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

/// Loss after each epoch, measured in inference mode over the full training
/// set (and the validation set when one is given).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub loss: LossKind,
    pub train: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub validation: Vec<f64>,
}

/// Mean reported loss of `net` over every row.
pub fn evaluate_loss(
    net: &DenseNet,
    inputs: &Matrix,
    targets: &Matrix,
    kind: LossKind,
) -> Result<f64> {
    let mut predictions = Vec::with_capacity(targets.as_slice().len());
    for row in inputs.row_iter() {
        predictions.extend(net.predict(row)?);
    }
    loss::loss(kind, &predictions, targets.as_slice())
}

fn check_shapes(net: &DenseNet, inputs: &Matrix, targets: &Matrix) -> Result<()> {
    if inputs.rows() != targets.rows() {
        return Err(Error::LengthMismatch {
            left: inputs.rows(),
            right: targets.rows(),
        });
    }
    if inputs.rows() == 0 {
        return Err(Error::InvalidConfig("training set is empty".into()));
    }
    if inputs.cols() != net.input_dim() {
        return Err(Error::DimensionMismatch {
            context: "training inputs",
            expected: net.input_dim(),
            actual: inputs.cols(),
        });
    }
    if targets.cols() != net.output_dim() {
        return Err(Error::DimensionMismatch {
            context: "training targets",
            expected: net.output_dim(),
            actual: targets.cols(),
        });
    }
    Ok(())
}

pub fn train(
    net: &mut DenseNet,
    inputs: &Matrix,
    targets: &Matrix,
    cfg: &TrainConfig,
    kind: LossKind,
) -> Result<History> {
    train_validated(net, inputs, targets, None, cfg, kind)
}

/// Mini-batch SGD. Each step averages per-example gradients over the batch.
/// All randomness (shuffling and dropout masks) comes from one ChaCha stream
/// seeded with `cfg.seed`.
pub fn train_validated(
    net: &mut DenseNet,
    inputs: &Matrix,
    targets: &Matrix,
    validation: Option<(&Matrix, &Matrix)>,
    cfg: &TrainConfig,
    kind: LossKind,
) -> Result<History> {
    cfg.validate()?;
    check_shapes(net, inputs, targets)?;
    loss::validate_targets(kind, targets.as_slice())?;
    if let Some((vx, vy)) = validation {
        check_shapes(net, vx, vy)?;
        loss::validate_targets(kind, vy.as_slice())?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..inputs.rows()).collect();
    let mut history = History {
        loss: kind,
        train: Vec::with_capacity(cfg.epochs),
        validation: Vec::new(),
    };

    for epoch in 1..=cfg.epochs {
        if cfg.shuffle {
            order.shuffle(&mut rng);
        }
        for batch in order.chunks(cfg.batch_size) {
            let mut acc = Gradients::zeros_like(net);
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let (_, trace) = net.forward(inputs.row(i), Mode::Train, &mut rng)?;
                let g = net.backward(&trace, targets.row(i), kind)?;
                acc.accumulate(&g, scale);
            }
            net.apply_gradients(&acc, cfg.learning_rate);
        }

        let epoch_loss = if net.is_finite() {
            evaluate_loss(net, inputs, targets, kind)?
        } else {
            f64::NAN
        };
        if !epoch_loss.is_finite() {
            return Err(Error::Divergence {
                epoch,
                loss: epoch_loss,
            });
        }
        history.train.push(epoch_loss);
        if let Some((vx, vy)) = validation {
            history.validation.push(evaluate_loss(net, vx, vy, kind)?);
        }
    }
    Ok(history)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, LayerSpec};

    fn and_gate() -> (Matrix, Matrix) {
        let x = Matrix::from_rows(&[
            vec![0.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
        ])
        .unwrap();
        let y = Matrix::from_rows(&[vec![0.0], vec![0.0], vec![0.0], vec![1.0]]).unwrap();
        (x, y)
    }

    fn small_net(seed: u64) -> DenseNet {
        DenseNet::build(
            2,
            &[
                LayerSpec::new(8, Activation::Relu, 0.0),
                LayerSpec::new(1, Activation::Sigmoid, 0.0),
            ],
            &mut ChaCha8Rng::seed_from_u64(seed),
        )
        .unwrap()
    }

    #[test]
    fn learns_and_gate() {
        let (x, y) = and_gate();
        let mut net = small_net(1);
        let cfg = TrainConfig {
            epochs: 500,
            learning_rate: 0.5,
            batch_size: 4,
            seed: 3,
            shuffle: true,
        };
        let h = train(&mut net, &x, &y, &cfg, LossKind::Bce).unwrap();
        assert_eq!(h.train.len(), 500);
        let last = *h.train.last().unwrap();
        assert!(last < 0.05, "final bce {last}");
    }

    #[test]
    fn zero_learning_rate_is_noop() {
        let (x, y) = and_gate();
        let mut net = small_net(2);
        let before = net.clone();
        let cfg = TrainConfig {
            epochs: 5,
            learning_rate: 0.0,
            batch_size: 2,
            seed: 0,
            shuffle: true,
        };
        let h = train(&mut net, &x, &y, &cfg, LossKind::Bce).unwrap();
        assert_eq!(net, before);
        assert!(h.train.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn same_seed_same_history_and_weights() {
        let (x, y) = and_gate();
        let cfg = TrainConfig {
            epochs: 30,
            learning_rate: 0.5,
            batch_size: 3,
            seed: 42,
            shuffle: true,
        };
        let mut a = small_net(9);
        let mut b = small_net(9);
        let ha = train(&mut a, &x, &y, &cfg, LossKind::Bce).unwrap();
        let hb = train(&mut b, &x, &y, &cfg, LossKind::Bce).unwrap();
        assert_eq!(ha, hb);
        let bits = |n: &DenseNet| {
            n.parameters()
                .iter()
                .map(|v| v.to_bits())
                .collect::<Vec<_>>()
        };
        assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn divergence_names_epoch() {
        let x = Matrix::from_rows(&[vec![1e3], vec![-1e3]]).unwrap();
        let y = Matrix::from_rows(&[vec![1e3], vec![-1e3]]).unwrap();
        let mut net = DenseNet::build(
            1,
            &[LayerSpec::new(1, Activation::Identity, 0.0)],
            &mut ChaCha8Rng::seed_from_u64(0),
        )
        .unwrap();
        let cfg = TrainConfig {
            epochs: 50,
            learning_rate: 10.0,
            batch_size: 1,
            seed: 0,
            shuffle: false,
        };
        match train(&mut net, &x, &y, &cfg, LossKind::MseForRmse) {
            Err(Error::Divergence { epoch, .. }) => assert!((1..=50).contains(&epoch)),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn invalid_config() {
        let (x, y) = and_gate();
        let mut net = small_net(0);
        let cfg = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        assert!(matches!(
            train(&mut net, &x, &y, &cfg, LossKind::Bce),
            Err(Error::InvalidConfig(_))
        ));
        let cfg = TrainConfig {
            batch_size: 0,
            ..TrainConfig::default()
        };
        assert!(train(&mut net, &x, &y, &cfg, LossKind::Bce).is_err());
    }

    #[test]
    fn row_count_mismatch() {
        let (x, _) = and_gate();
        let y = Matrix::from_rows(&[vec![1.0]]).unwrap();
        let mut net = small_net(0);
        assert!(matches!(
            train(&mut net, &x, &y, &TrainConfig::default(), LossKind::Bce),
            Err(Error::LengthMismatch { .. })
        ));
    }
}

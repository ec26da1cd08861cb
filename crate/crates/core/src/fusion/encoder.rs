use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Modality;
use crate::error::{Error, Result};
use crate::metrics::{self, ClassificationReport, ConfusionMatrix};
use crate::nn::{self, Activation, DenseNet, History, LayerSpec, LossKind, Matrix, TrainConfig};

/// Paper-reported dropout rate, used for every hidden layer by default.
pub const DEFAULT_DROPOUT: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderSpec {
    pub modality: Modality,
    pub hidden_dims: Vec<usize>,
    pub dropout_rate: f64,
}

impl EncoderSpec {
    /// Keystroke gets a single hidden layer; the wider modalities get two.
    pub fn default_for(modality: Modality) -> Self {
        let hidden_dims = match modality {
            Modality::Keystroke => vec![16],
            Modality::Posture | Modality::Facial => vec![64, 32],
            Modality::Physiology => vec![8],
        };
        Self {
            modality,
            hidden_dims,
            dropout_rate: DEFAULT_DROPOUT,
        }
    }

    pub fn feature_dim(&self) -> usize {
        self.hidden_dims.last().copied().unwrap_or(0)
    }

    fn layer_specs(&self) -> Vec<LayerSpec> {
        self.hidden_dims
            .iter()
            .map(|&units| LayerSpec::new(units, Activation::Relu, self.dropout_rate))
            .chain(std::iter::once(LayerSpec::new(1, Activation::Sigmoid, 0.0)))
            .collect()
    }
}

/// A modality network: ReLU hidden stack (the feature map) plus a sigmoid
/// scalar head used for standalone training and late fusion.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoder {
    modality: Modality,
    net: DenseNet,
}

pub fn build_encoder(spec: &EncoderSpec, input_dim: usize, seed: u64) -> Result<Encoder> {
    if spec.hidden_dims.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "{}: encoder needs a hidden layer",
            spec.modality
        )));
    }
    if spec.hidden_dims.contains(&0) {
        return Err(Error::InvalidConfig(format!(
            "{}: zero-width hidden layer",
            spec.modality
        )));
    }
    if input_dim == 0 {
        return Err(Error::InvalidConfig(format!(
            "{}: zero input dimension",
            spec.modality
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let net = DenseNet::build(input_dim, &spec.layer_specs(), &mut rng)?;
    Encoder::from_net(spec.modality, net)
}

impl Encoder {
    /// Wraps an existing network, which must end in a one-unit sigmoid layer
    /// preceded by at least one hidden layer.
    pub fn from_net(modality: Modality, net: DenseNet) -> Result<Self> {
        let layers = net.layers();
        let head = layers.last().expect("nets are non-empty");
        if layers.len() < 2 || head.output_dim() != 1 || head.activation != Activation::Sigmoid {
            return Err(Error::InvalidConfig(format!(
                "{modality}: encoder must be hidden layers plus a 1-unit sigmoid head"
            )));
        }
        Ok(Self { modality, net })
    }

    pub fn modality(&self) -> Modality {
        self.modality
    }

    pub fn net(&self) -> &DenseNet {
        &self.net
    }

    pub fn input_dim(&self) -> usize {
        self.net.input_dim()
    }

    /// Width of the last hidden layer.
    pub fn feature_dim(&self) -> usize {
        let layers = self.net.layers();
        layers[layers.len() - 2].output_dim()
    }

    /// Last-hidden-layer activations in inference mode (head excluded).
    pub fn extract_features(&self, input: &[f64]) -> Result<Vec<f64>> {
        let hidden = self.net.layers().len() - 1;
        self.net.truncated(hidden)?.predict(input)
    }

    /// Stress probability from the encoder's own head.
    pub fn probability(&self, input: &[f64]) -> Result<f64> {
        Ok(self.net.predict(input)?[0])
    }

    pub fn probabilities(&self, block: &Matrix) -> Result<Vec<f64>> {
        block.row_iter().map(|row| self.probability(row)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct UnimodalOutcome {
    pub encoder: Encoder,
    pub history: History,
    pub confusion: ConfusionMatrix,
    pub report: ClassificationReport,
}

fn label_matrix(labels: &[u8]) -> Result<Matrix> {
    Matrix::from_vec(
        labels.len(),
        1,
        labels.iter().map(|&l| f64::from(l)).collect(),
    )
}

/// Thresholds `probabilities` (ties count as stressed) and scores them against `labels`.
pub fn classify_at(
    probabilities: &[f64],
    labels: &[u8],
    threshold: f64,
) -> Result<(ConfusionMatrix, ClassificationReport)> {
    let predicted: Vec<u8> = probabilities
        .iter()
        .map(|&p| u8::from(p >= threshold))
        .collect();
    let cm = metrics::confusion(&predicted, labels)?;
    let report = metrics::report(&cm)?;
    Ok((cm, report))
}

/// Trains an encoder standalone with BCE. The report is computed on
/// `heldout` when given, otherwise on the training rows.
pub fn train_unimodal(
    mut encoder: Encoder,
    inputs: &Matrix,
    labels: &[u8],
    heldout: Option<(&Matrix, &[u8])>,
    cfg: &TrainConfig,
) -> Result<UnimodalOutcome> {
    if inputs.cols() != encoder.input_dim() {
        return Err(Error::DimensionMismatch {
            context: "unimodal block width",
            expected: encoder.input_dim(),
            actual: inputs.cols(),
        });
    }
    let targets = label_matrix(labels)?;
    let held = heldout
        .map(|(x, y)| label_matrix(y).map(|t| (x, t)))
        .transpose()?;
    let history = nn::train_validated(
        &mut encoder.net,
        inputs,
        &targets,
        held.as_ref().map(|(x, t)| (*x, t)),
        cfg,
        LossKind::Bce,
    )?;
    let (eval_x, eval_y) = heldout.unwrap_or((inputs, labels));
    let (confusion, report) = classify_at(&encoder.probabilities(eval_x)?, eval_y, 0.5)?;
    Ok(UnimodalOutcome {
        encoder,
        history,
        confusion,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::DenseLayer;

    #[test]
    fn keystroke_dims() {
        let e = build_encoder(&EncoderSpec::default_for(Modality::Keystroke), 8, 0).unwrap();
        assert_eq!(e.net().dims(), vec![8, 16, 1]);
        assert_eq!(e.feature_dim(), 16);
    }

    #[test]
    fn posture_dims() {
        let e = build_encoder(&EncoderSpec::default_for(Modality::Posture), 20, 0).unwrap();
        assert_eq!(e.net().dims(), vec![20, 64, 32, 1]);
        assert_eq!(e.feature_dim(), 32);
        assert!(e.net().layers()[..2]
            .iter()
            .all(|l| l.activation == Activation::Relu && l.dropout_rate == 0.5));
    }

    #[test]
    fn empty_or_zero_width_hidden_rejected() {
        let mut spec = EncoderSpec::default_for(Modality::Facial);
        spec.hidden_dims.clear();
        assert!(build_encoder(&spec, 4, 0).is_err());
        spec.hidden_dims = vec![8, 0];
        assert!(build_encoder(&spec, 4, 0).is_err());
    }

    #[test]
    fn identity_hidden_layer_returns_relu_of_input() {
        let hidden =
            DenseLayer::new(Matrix::identity(3), vec![0.0; 3], Activation::Relu, 0.5).unwrap();
        let head = DenseLayer::new(
            Matrix::from_vec(1, 3, vec![1.0; 3]).unwrap(),
            vec![0.0],
            Activation::Sigmoid,
            0.0,
        )
        .unwrap();
        let e = Encoder::from_net(
            Modality::Keystroke,
            DenseNet::from_layers(3, vec![hidden, head]).unwrap(),
        )
        .unwrap();
        assert_eq!(
            e.extract_features(&[0.5, 0.0, 2.0]).unwrap(),
            vec![0.5, 0.0, 2.0]
        );
        assert_eq!(
            e.extract_features(&[-1.0, 3.0, 0.0]).unwrap(),
            vec![0.0, 3.0, 0.0]
        );
    }

    #[test]
    fn extract_features_dimension_mismatch() {
        let e = build_encoder(&EncoderSpec::default_for(Modality::Keystroke), 8, 0).unwrap();
        assert!(matches!(
            e.extract_features(&[1.0; 3]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn single_class_labels_flag_degenerate_report() {
        let x = Matrix::from_rows(
            &(0..20)
                .map(|i| vec![i as f64 / 10.0, 1.0])
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let y = vec![0u8; 20];
        let e = build_encoder(&EncoderSpec::default_for(Modality::Keystroke), 2, 1).unwrap();
        let cfg = TrainConfig {
            epochs: 5,
            ..TrainConfig::default()
        };
        let out = train_unimodal(e, &x, &y, None, &cfg).unwrap();
        assert!(out.report.degenerate.recall);
        assert!(out.report.degenerate.any());
    }
}

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::encoder::{classify_at, Encoder, DEFAULT_DROPOUT};
use crate::data::{AlignedDataset, Modality, Record, PHYSIO_DIM};
use crate::error::{Error, Result};
use crate::metrics::{ClassificationReport, ConfusionMatrix};
use crate::nn::{self, Activation, DenseNet, History, LayerSpec, LossKind, Matrix, TrainConfig};

pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FusionMode {
    /// Concatenated last-hidden-layer features.
    Early,
    /// Per-modality stress probabilities.
    Late,
}

impl fmt::Display for FusionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FusionMode::Early => "early",
            FusionMode::Late => "late",
        })
    }
}

impl std::str::FromStr for FusionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "early" => Ok(FusionMode::Early),
            "late" => Ok(FusionMode::Late),
            other => Err(Error::InvalidConfig(format!(
                "fusion mode `{other}` (expected early|late)"
            ))),
        }
    }
}

/// Hidden stack of a fusion or regression head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadSpec {
    pub hidden_dims: Vec<usize>,
    pub dropout_rate: f64,
    pub seed: u64,
}

impl Default for HeadSpec {
    fn default() -> Self {
        Self {
            hidden_dims: vec![32, 16],
            dropout_rate: DEFAULT_DROPOUT,
            seed: 0,
        }
    }
}

impl HeadSpec {
    pub(crate) fn build(&self, input_dim: usize, output: Activation) -> Result<DenseNet> {
        if self.hidden_dims.len() != 2 || self.hidden_dims.contains(&0) {
            return Err(Error::InvalidConfig(
                "heads use exactly two non-empty hidden layers".into(),
            ));
        }
        let specs: Vec<LayerSpec> = self
            .hidden_dims
            .iter()
            .map(|&u| LayerSpec::new(u, Activation::Relu, self.dropout_rate))
            .chain(std::iter::once(LayerSpec::new(1, output, 0.0)))
            .collect();
        DenseNet::build(input_dim, &specs, &mut ChaCha8Rng::seed_from_u64(self.seed))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub probability: f64,
    pub label: u8,
}

/// Frozen encoders plus a trained fusion head.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionModel {
    mode: FusionMode,
    encoders: Vec<Encoder>,
    head: DenseNet,
    threshold: f64,
}

/// Width of the head input for `mode` over `encoders`.
pub fn fusion_input_dim(mode: FusionMode, encoders: &[Encoder]) -> usize {
    let encoded: usize = match mode {
        FusionMode::Early => encoders.iter().map(Encoder::feature_dim).sum(),
        FusionMode::Late => encoders.len(),
    };
    encoded + PHYSIO_DIM
}

fn check_encoders(encoders: &mut [Encoder]) -> Result<()> {
    if encoders.is_empty() {
        return Err(Error::InvalidConfig(
            "fusion needs at least one encoder".into(),
        ));
    }
    encoders.sort_by_key(Encoder::modality);
    for w in encoders.windows(2) {
        if w[0].modality() == w[1].modality() {
            return Err(Error::InvalidConfig(format!(
                "two encoders for {}",
                w[0].modality()
            )));
        }
    }
    if encoders
        .iter()
        .any(|e| e.modality() == Modality::Physiology)
    {
        return Err(Error::InvalidConfig(
            "physiology enters the head raw, not through an encoder".into(),
        ));
    }
    Ok(())
}

/// Builds the head input for one record.
pub(crate) fn fuse(mode: FusionMode, encoders: &[Encoder], record: &Record) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(fusion_input_dim(mode, encoders));
    for e in encoders {
        let block = record.block(e.modality())?;
        match mode {
            FusionMode::Early => out.extend(e.extract_features(block)?),
            FusionMode::Late => {
                let p = e.probability(block)?;
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::ProbabilityOutOfRange {
                        modality: e.modality(),
                        value: p,
                    });
                }
                out.push(p);
            }
        }
    }
    let physio = record.block(Modality::Physiology)?;
    if physio.len() != PHYSIO_DIM {
        return Err(Error::DimensionMismatch {
            context: "physiology vector",
            expected: PHYSIO_DIM,
            actual: physio.len(),
        });
    }
    out.extend_from_slice(physio);
    Ok(out)
}

pub(crate) fn fuse_dataset(
    mode: FusionMode,
    encoders: &[Encoder],
    dataset: &AlignedDataset,
) -> Result<Matrix> {
    let width = fusion_input_dim(mode, encoders);
    let mut data = Vec::with_capacity(dataset.len() * width);
    for i in 0..dataset.len() {
        data.extend(fuse(mode, encoders, &dataset.record(i))?);
    }
    Matrix::from_vec(dataset.len(), width, data)
}

#[derive(Debug, Clone)]
pub struct FusionOutcome {
    pub model: FusionModel,
    pub history: History,
}

fn assemble_and_train(
    mode: FusionMode,
    mut encoders: Vec<Encoder>,
    train: &AlignedDataset,
    validation: Option<&AlignedDataset>,
    cfg: &TrainConfig,
    head: &HeadSpec,
) -> Result<FusionOutcome> {
    check_encoders(&mut encoders)?;
    let inputs = fuse_dataset(mode, &encoders, train)?;
    let targets = Matrix::from_vec(train.len(), 1, train.labels_f64())?;
    let val = match validation {
        Some(v) => Some((
            fuse_dataset(mode, &encoders, v)?,
            Matrix::from_vec(v.len(), 1, v.labels_f64())?,
        )),
        None => None,
    };
    let mut net = head.build(inputs.cols(), Activation::Sigmoid)?;
    let history = nn::train_validated(
        &mut net,
        &inputs,
        &targets,
        val.as_ref().map(|(x, y)| (x, y)),
        cfg,
        LossKind::Bce,
    )?;
    Ok(FusionOutcome {
        model: FusionModel {
            mode,
            encoders,
            head: net,
            threshold: DEFAULT_THRESHOLD,
        },
        history,
    })
}

/// Early fusion: the head sees every encoder's last hidden layer
/// concatenated with the raw physiology vector. Encoders stay frozen.
pub fn assemble_and_train_early(
    encoders: Vec<Encoder>,
    train: &AlignedDataset,
    validation: Option<&AlignedDataset>,
    cfg: &TrainConfig,
    head: &HeadSpec,
) -> Result<FusionOutcome> {
    assemble_and_train(FusionMode::Early, encoders, train, validation, cfg, head)
}

/// Late fusion: the head sees each encoder's stress probability followed by
/// the raw physiology vector. Encoders stay frozen.
pub fn assemble_and_train_late(
    encoders: Vec<Encoder>,
    train: &AlignedDataset,
    validation: Option<&AlignedDataset>,
    cfg: &TrainConfig,
    head: &HeadSpec,
) -> Result<FusionOutcome> {
    assemble_and_train(FusionMode::Late, encoders, train, validation, cfg, head)
}

impl FusionModel {
    /// Reassembles a model from stored parts, checking every dimension.
    pub fn from_parts(
        mode: FusionMode,
        mut encoders: Vec<Encoder>,
        head: DenseNet,
        threshold: f64,
    ) -> Result<Self> {
        check_encoders(&mut encoders)?;
        let expected = fusion_input_dim(mode, &encoders);
        if head.input_dim() != expected {
            return Err(Error::DimensionMismatch {
                context: "fusion head input",
                expected,
                actual: head.input_dim(),
            });
        }
        let out = head.layers().last().expect("non-empty");
        if out.output_dim() != 1 || out.activation != Activation::Sigmoid {
            return Err(Error::InvalidConfig(
                "fusion head must end in one sigmoid unit".into(),
            ));
        }
        if !(0.0..=1.0).contains(&threshold) {
            return Err(Error::InvalidConfig(format!(
                "threshold {threshold} outside [0, 1]"
            )));
        }
        Ok(Self {
            mode,
            encoders,
            head,
            threshold,
        })
    }

    pub fn mode(&self) -> FusionMode {
        self.mode
    }

    pub fn encoders(&self) -> &[Encoder] {
        &self.encoders
    }

    pub fn head(&self) -> &DenseNet {
        &self.head
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn physio_dim(&self) -> usize {
        PHYSIO_DIM
    }

    pub fn head_input_dim(&self) -> usize {
        self.head.input_dim()
    }

    pub fn fusion_input(&self, record: &Record) -> Result<Vec<f64>> {
        fuse(self.mode, &self.encoders, record)
    }

    /// Probability from the fusion head; label is 1 iff probability ≥ threshold.
    pub fn predict_stress(&self, record: &Record) -> Result<Prediction> {
        let probability = self.head.predict(&self.fusion_input(record)?)?[0];
        Ok(Prediction {
            probability,
            label: u8::from(probability >= self.threshold),
        })
    }

    pub fn predict_dataset(&self, dataset: &AlignedDataset) -> Result<Vec<Prediction>> {
        (0..dataset.len())
            .map(|i| self.predict_stress(&dataset.record(i)))
            .collect()
    }

    pub fn evaluate(
        &self,
        dataset: &AlignedDataset,
    ) -> Result<(ConfusionMatrix, ClassificationReport)> {
        let probs: Vec<f64> = self
            .predict_dataset(dataset)?
            .iter()
            .map(|p| p.probability)
            .collect();
        classify_at(&probs, dataset.labels(), self.threshold)
    }
}

use serde::{Deserialize, Serialize};

use super::encoder::Encoder;
use super::model::{fuse, fuse_dataset, FusionMode, FusionModel, HeadSpec};
use crate::data::{AlignedDataset, Record};
use crate::error::{Error, Result};
use crate::metrics::{self, RegressionReport};
use crate::nn::{self, Activation, DenseNet, History, LossKind, Matrix, TrainConfig};

pub const TLX_MAX: f64 = 100.0;

/// Regressor head dropout. Lower than the classifiers' 0.5, which leaves a
/// scalar identity output badly underfit.
pub const REGRESSOR_DROPOUT: f64 = 0.1;
pub const REGRESSOR_LEARNING_RATE: f64 = 0.05;

impl HeadSpec {
    /// 32 -> 16 head with the regressor dropout rate.
    pub fn regressor(seed: u64) -> Self {
        Self {
            dropout_rate: REGRESSOR_DROPOUT,
            seed,
            ..Self::default()
        }
    }
}

/// Units the regression head is trained in.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetScale {
    Raw0To100,
    #[default]
    Normalized0To1,
}

impl TargetScale {
    fn factor(self) -> f64 {
        match self {
            TargetScale::Raw0To100 => 1.0,
            TargetScale::Normalized0To1 => TLX_MAX,
        }
    }
}

/// NASA-TLX regressor on top of the frozen early-fusion feature map.
#[derive(Debug, Clone, PartialEq)]
pub struct TlxRegressor {
    encoders: Vec<Encoder>,
    head: DenseNet,
    target_scale: TargetScale,
}

#[derive(Debug, Clone)]
pub struct TlxOutcome {
    pub regressor: TlxRegressor,
    pub history: History,
}

/// TLX scores reported in both units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TlxReport {
    pub rmse_normalized: f64,
    pub rmse_raw: f64,
    /// Residuals and band fractions on the raw 0-100 scale.
    pub raw: RegressionReport,
}

/// Trains a two-hidden-layer identity-output head on MSE over the
/// early-fusion feature map. The early model's encoders are copied and never
/// updated.
pub fn train_tlx_regressor(
    early_model: &FusionModel,
    train: &AlignedDataset,
    validation: Option<&AlignedDataset>,
    cfg: &TrainConfig,
    head: &HeadSpec,
    target_scale: TargetScale,
) -> Result<TlxOutcome> {
    if early_model.mode() != FusionMode::Early {
        return Err(Error::InvalidConfig(
            "TLX regression reuses the early-fusion feature map".into(),
        ));
    }
    let encoders = early_model.encoders().to_vec();
    let targets = |ds: &AlignedDataset| -> Result<Matrix> {
        let t = ds.tlx().ok_or(Error::MissingTlxTargets)?;
        Matrix::from_vec(
            t.len(),
            1,
            t.iter().map(|v| v / target_scale.factor()).collect(),
        )
    };
    let inputs = fuse_dataset(FusionMode::Early, &encoders, train)?;
    let y = targets(train)?;
    let val = match validation {
        Some(v) => Some((fuse_dataset(FusionMode::Early, &encoders, v)?, targets(v)?)),
        None => None,
    };
    let mut net = head.build(inputs.cols(), Activation::Identity)?;
    let history = nn::train_validated(
        &mut net,
        &inputs,
        &y,
        val.as_ref().map(|(x, y)| (x, y)),
        cfg,
        LossKind::MseForRmse,
    )?;
    Ok(TlxOutcome {
        regressor: TlxRegressor {
            encoders,
            head: net,
            target_scale,
        },
        history,
    })
}

impl TlxRegressor {
    pub fn from_parts(
        encoders: Vec<Encoder>,
        head: DenseNet,
        target_scale: TargetScale,
    ) -> Result<Self> {
        let expected = super::model::fusion_input_dim(FusionMode::Early, &encoders);
        if head.input_dim() != expected {
            return Err(Error::DimensionMismatch {
                context: "regressor head input",
                expected,
                actual: head.input_dim(),
            });
        }
        if head.output_dim() != 1 {
            return Err(Error::InvalidConfig(
                "regressor head must have a scalar output".into(),
            ));
        }
        Ok(Self {
            encoders,
            head,
            target_scale,
        })
    }

    pub fn encoders(&self) -> &[Encoder] {
        &self.encoders
    }

    pub fn head(&self) -> &DenseNet {
        &self.head
    }

    pub fn target_scale(&self) -> TargetScale {
        self.target_scale
    }

    /// Unclamped head output in training units.
    pub fn raw_output(&self, record: &Record) -> Result<f64> {
        let x = fuse(FusionMode::Early, &self.encoders, record)?;
        Ok(self.head.predict(&x)?[0])
    }

    /// Head output converted to the 0-100 scale and clamped to it.
    pub fn scale_output(&self, raw: f64) -> f64 {
        (raw * self.target_scale.factor()).clamp(0.0, TLX_MAX)
    }

    pub fn predict_tlx(&self, record: &Record) -> Result<f64> {
        Ok(self.scale_output(self.raw_output(record)?))
    }

    pub fn predict_dataset(&self, dataset: &AlignedDataset) -> Result<Vec<f64>> {
        (0..dataset.len())
            .map(|i| self.predict_tlx(&dataset.record(i)))
            .collect()
    }

    pub fn evaluate(&self, dataset: &AlignedDataset) -> Result<TlxReport> {
        let targets = dataset.tlx().ok_or(Error::MissingTlxTargets)?;
        let preds = self.predict_dataset(dataset)?;
        let raw = metrics::regression_report(&preds, targets)?;
        let norm_p: Vec<f64> = preds.iter().map(|p| p / TLX_MAX).collect();
        let norm_t: Vec<f64> = targets.iter().map(|t| t / TLX_MAX).collect();
        Ok(TlxReport {
            rmse_normalized: nn::rmse(&norm_p, &norm_t)?,
            rmse_raw: raw.rmse,
            raw,
        })
    }
}

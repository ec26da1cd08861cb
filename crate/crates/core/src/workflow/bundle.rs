use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{create_dir, read_json, write_json};
use crate::data::{AlignedDataset, Modality, NormalizationStats, SplitSpec, PHYSIO_DIM};
use crate::error::{Error, Result};
use crate::fusion::{Encoder, FusionMode, FusionModel, TargetScale, TlxRegressor};
use crate::nn::{load_weights, save_weights, TrainConfig};

pub const BUNDLE_FORMAT_VERSION: u32 = 1;
const MANIFEST_FILE: &str = "manifest.json";
const NORMALIZATION_FILE: &str = "normalization.json";
const FUSION_HEAD_FILE: &str = "fusion_head.json";
const TLX_HEAD_FILE: &str = "tlx_head.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderEntry {
    pub modality: Modality,
    pub file: String,
    pub input_dim: usize,
    pub feature_dim: usize,
    pub feature_columns: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TlxEntry {
    pub file: String,
    pub target_scale: TargetScale,
    pub input_dim: usize,
}

/// Everything needed to rebuild the model and reproduce its data split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleManifest {
    pub format_version: u32,
    pub mode: FusionMode,
    pub threshold: f64,
    pub physio_dim: usize,
    pub physiology_columns: Vec<String>,
    pub seed: u64,
    pub split: SplitSpec,
    pub aligned_rows: usize,
    pub train: TrainConfig,
    pub encoders: Vec<EncoderEntry>,
    pub fusion_head: String,
    pub head_input_dim: usize,
    pub normalization: String,
    pub tlx: Option<TlxEntry>,
}

#[derive(Debug, Clone)]
pub struct Bundle {
    pub manifest: BundleManifest,
    pub model: FusionModel,
    pub regressor: Option<TlxRegressor>,
    pub normalization: NormalizationStats,
}

fn encoder_file(m: Modality) -> String {
    format!("encoder_{m}.json")
}

impl Bundle {
    /// Checks that `dataset` has the columns this bundle was trained on.
    pub fn check_dataset(&self, dataset: &AlignedDataset) -> Result<()> {
        let expect = self
            .manifest
            .encoders
            .iter()
            .map(|e| (e.modality, &e.feature_columns))
            .chain(std::iter::once((
                Modality::Physiology,
                &self.manifest.physiology_columns,
            )));
        for (m, columns) in expect {
            match dataset.feature_names(m) {
                None => return Err(Error::MissingModality(m)),
                Some(found) if found != columns.as_slice() => {
                    return Err(Error::BundleMismatch(format!(
                        "{m} columns differ: bundle has [{}], data has [{}]",
                        columns.join(","),
                        found.join(",")
                    )))
                }
                Some(_) => {}
            }
        }
        Ok(())
    }
}

/// Writes a bundle directory. File contents depend only on the arguments.
pub fn save_bundle(
    dir: &Path,
    model: &FusionModel,
    regressor: Option<&TlxRegressor>,
    dataset: &AlignedDataset,
    split: SplitSpec,
    seed: u64,
    train: TrainConfig,
) -> Result<BundleManifest> {
    let normalization = dataset.normalization().ok_or_else(|| {
        Error::InvalidConfig("bundles store normalization stats; dataset is raw".into())
    })?;
    create_dir(dir)?;
    let mut encoders = Vec::new();
    for e in model.encoders() {
        let file = encoder_file(e.modality());
        save_weights(e.net(), dir.join(&file))?;
        encoders.push(EncoderEntry {
            modality: e.modality(),
            file,
            input_dim: e.input_dim(),
            feature_dim: e.feature_dim(),
            feature_columns: dataset
                .feature_names(e.modality())
                .unwrap_or_default()
                .to_vec(),
        });
    }
    save_weights(model.head(), dir.join(FUSION_HEAD_FILE))?;
    write_json(&dir.join(NORMALIZATION_FILE), normalization)?;
    let tlx = match regressor {
        Some(r) => {
            if r.encoders() != model.encoders() {
                return Err(Error::BundleMismatch(
                    "regressor does not share the model's encoders".into(),
                ));
            }
            save_weights(r.head(), dir.join(TLX_HEAD_FILE))?;
            Some(TlxEntry {
                file: TLX_HEAD_FILE.into(),
                target_scale: r.target_scale(),
                input_dim: r.head().input_dim(),
            })
        }
        None => None,
    };
    let manifest = BundleManifest {
        format_version: BUNDLE_FORMAT_VERSION,
        mode: model.mode(),
        threshold: model.threshold(),
        physio_dim: PHYSIO_DIM,
        physiology_columns: dataset
            .feature_names(Modality::Physiology)
            .unwrap_or_default()
            .to_vec(),
        seed,
        split,
        aligned_rows: dataset.len(),
        train,
        encoders,
        fusion_head: FUSION_HEAD_FILE.into(),
        head_input_dim: model.head_input_dim(),
        normalization: NORMALIZATION_FILE.into(),
        tlx,
    };
    write_json(&dir.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

pub fn load_bundle(dir: &Path) -> Result<Bundle> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let manifest: BundleManifest = read_json(&manifest_path)?;
    if manifest.format_version != BUNDLE_FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            found: manifest.format_version,
            expected: BUNDLE_FORMAT_VERSION,
        });
    }
    if manifest.physio_dim != PHYSIO_DIM {
        return Err(Error::BundleMismatch(format!(
            "physio_dim {} != {PHYSIO_DIM}",
            manifest.physio_dim
        )));
    }
    let mut encoders = Vec::new();
    for entry in &manifest.encoders {
        let encoder = Encoder::from_net(entry.modality, load_weights(dir.join(&entry.file))?)?;
        if encoder.input_dim() != entry.input_dim
            || encoder.feature_dim() != entry.feature_dim
            || entry.feature_columns.len() != entry.input_dim
        {
            return Err(Error::BundleMismatch(format!(
                "{} encoder disagrees with the manifest",
                entry.modality
            )));
        }
        encoders.push(encoder);
    }
    let head = load_weights(dir.join(&manifest.fusion_head))?;
    if head.input_dim() != manifest.head_input_dim {
        return Err(Error::BundleMismatch(
            "fusion head width disagrees with the manifest".into(),
        ));
    }
    let model = FusionModel::from_parts(manifest.mode, encoders, head, manifest.threshold)?;
    let regressor = match &manifest.tlx {
        Some(t) => {
            let head = load_weights(dir.join(&t.file))?;
            if head.input_dim() != t.input_dim {
                return Err(Error::BundleMismatch(
                    "regressor head width disagrees with the manifest".into(),
                ));
            }
            Some(TlxRegressor::from_parts(
                model.encoders().to_vec(),
                head,
                t.target_scale,
            )?)
        }
        None => None,
    };
    let normalization = read_json(&dir.join(&manifest.normalization))?;
    Ok(Bundle {
        manifest,
        model,
        regressor,
        normalization,
    })
}

//! End-to-end pipelines behind the command-line tool: ingest, align,
//! split, normalize, train, evaluate, predict, timeline and cross-validation.
//!
//! Every stage tags its errors with the stage name, and every random choice
//! draws its seed from [`RunConfig::seed`] through [`crate::seed::derive`].

mod bundle;
mod crossval;
mod evaluate;
mod monitor;
mod train;

pub use bundle::{
    load_bundle, save_bundle, Bundle, BundleManifest, EncoderEntry, TlxEntry, BUNDLE_FORMAT_VERSION,
};
pub use crossval::{crossval, Aggregate, CrossvalReport, FoldReport};
pub use evaluate::{evaluate, evaluate_bundle, predict, EvaluationReport, PredictionRow};
pub use monitor::{timeline, timestamps, TimelineRun};
pub use train::{fit_models, train, Fitted, HistoryReport, TrainReport, TrainRun, UnimodalReport};

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{
    align, load_modality, AlignedDataset, AlignmentReport, LabelSources, LoadReport, Modality,
    SchemaManifest,
};
use crate::error::{Error, Result, StageExt};
use crate::fusion::FusionMode;
use crate::nn::TrainConfig;
use crate::seed;

/// Parameters shared by every command. Field names match the command-line
/// flags and the keys of an optional JSON config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub manifest: Option<PathBuf>,
    pub bundle: Vec<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub seed: u64,
    pub mode: FusionMode,
    pub epochs: usize,
    pub lr: f64,
    pub batch: usize,
    pub split: f64,
    pub k: usize,
    pub min_run: usize,
    pub with_tlx: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            manifest: None,
            bundle: Vec::new(),
            out_dir: None,
            seed: 0,
            mode: FusionMode::Early,
            epochs: t.epochs,
            lr: t.learning_rate,
            batch: t.batch_size,
            split: 0.7,
            k: 5,
            min_run: crate::timeline::DEFAULT_MIN_RUN,
            with_tlx: false,
        }
    }
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::corrupt(path, e))
    }

    /// Training settings for one stage; the shuffle seed is derived from `label`.
    pub fn train_config(&self, label: &str) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            learning_rate: self.lr,
            batch_size: self.batch,
            seed: seed::derive(self.seed, label),
            shuffle: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.train_config("validate").validate()?;
        if !(self.split > 0.0 && self.split < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "split fraction {} must lie in (0, 1)",
                self.split
            )));
        }
        crate::timeline::PersistencePolicy::new(self.min_run)?;
        if self.with_tlx && self.mode != FusionMode::Early {
            return Err(Error::InvalidConfig("--with-tlx needs --mode early".into()));
        }
        Ok(())
    }

    pub fn manifest_path(&self) -> Result<&Path> {
        self.manifest
            .as_deref()
            .ok_or_else(|| Error::InvalidConfig("a schema manifest path is required".into()))
    }

    pub fn out_dir_path(&self) -> Result<&Path> {
        self.out_dir
            .as_deref()
            .ok_or_else(|| Error::InvalidConfig("an output directory is required".into()))
    }

    pub fn single_bundle(&self) -> Result<&Path> {
        match self.bundle.as_slice() {
            [one] => Ok(one),
            [] => Err(Error::InvalidConfig(
                "a model bundle path is required".into(),
            )),
            _ => Err(Error::InvalidConfig(
                "this command takes exactly one bundle".into(),
            )),
        }
    }
}

/// Aligned rows plus what ingest and alignment dropped.
#[derive(Debug, Clone)]
pub struct Ingested {
    pub dataset: AlignedDataset,
    pub loads: Vec<LoadReport>,
    pub alignment: AlignmentReport,
}

/// Loads every modality named in the manifest and inner-joins them.
pub fn ingest(manifest_path: &Path) -> Result<Ingested> {
    let manifest = SchemaManifest::load(manifest_path).stage("ingest")?;
    let mut frames = Vec::new();
    let mut loads = Vec::new();
    for entry in &manifest.modalities {
        let path = manifest.resolve(entry);
        if !path.exists() {
            return Err(Error::MissingModality(entry.schema.modality)).stage("ingest");
        }
        let (frame, report) = load_modality(path, &entry.schema).stage("ingest")?;
        frames.push(frame);
        loads.push(report);
    }
    let (dataset, alignment) = LabelSources::infer(&frames)
        .and_then(|sources| align(&frames, sources))
        .stage("align")?;
    if dataset.block(Modality::Physiology).is_err() {
        return Err(Error::MissingModality(Modality::Physiology)).stage("align");
    }
    Ok(Ingested {
        dataset,
        loads,
        alignment,
    })
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::corrupt(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::corrupt(path, e))
}

pub(crate) fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        for bad in [
            RunConfig {
                epochs: 0,
                ..RunConfig::default()
            },
            RunConfig {
                split: 1.0,
                ..RunConfig::default()
            },
            RunConfig {
                min_run: 0,
                ..RunConfig::default()
            },
            RunConfig {
                with_tlx: true,
                mode: FusionMode::Late,
                ..RunConfig::default()
            },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn config_file_fields_match_flags() {
        let cfg: RunConfig =
            serde_json::from_str(r#"{"epochs": 3, "mode": "late", "split": 0.8}"#).unwrap();
        assert_eq!(
            (cfg.epochs, cfg.mode, cfg.split, cfg.batch),
            (3, FusionMode::Late, 0.8, 32)
        );
        assert!(serde_json::from_str::<RunConfig>(r#"{"epoch": 3}"#).is_err());
    }

    #[test]
    fn stage_seeds_differ() {
        let cfg = RunConfig::default();
        assert_ne!(cfg.train_config("a").seed, cfg.train_config("b").seed);
    }
}

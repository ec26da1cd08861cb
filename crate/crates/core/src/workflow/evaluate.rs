use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{create_dir, ingest, load_bundle, write_json, Bundle, RunConfig};
use crate::data::{split_indices, AlignedDataset};
use crate::error::{Error, Result, StageExt};
use crate::fusion::{FusionMode, FusionModel, TlxRegressor, TlxReport};
use crate::metrics::{self, ClassificationReport, ConfusionMatrix, RocCurve};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub mode: FusionMode,
    pub rows: usize,
    pub confusion: ConfusionMatrix,
    pub report: ClassificationReport,
    /// Absent when the rows hold a single class.
    pub roc: Option<RocCurve>,
    pub tlx: Option<TlxReport>,
}

pub(crate) fn evaluate_model(
    model: &FusionModel,
    regressor: Option<&TlxRegressor>,
    dataset: &AlignedDataset,
) -> Result<EvaluationReport> {
    let preds = model.predict_dataset(dataset)?;
    let labels: Vec<u8> = preds.iter().map(|p| p.label).collect();
    let scores: Vec<f64> = preds.iter().map(|p| p.probability).collect();
    let confusion = metrics::confusion(&labels, dataset.labels())?;
    let report = metrics::report(&confusion)?;
    let roc = match metrics::roc(&scores, dataset.labels()) {
        Ok(r) => Some(r),
        Err(Error::UndefinedRoc) => None,
        Err(e) => return Err(e),
    };
    let tlx = match (regressor, dataset.tlx()) {
        (Some(r), Some(_)) => Some(r.evaluate(dataset)?),
        _ => None,
    };
    Ok(EvaluationReport {
        mode: model.mode(),
        rows: dataset.len(),
        confusion,
        report,
        roc,
        tlx,
    })
}

/// Normalizes `dataset` with the bundle's stored statistics after checking
/// that it is the data the bundle was trained on.
fn prepare(bundle: &Bundle, dataset: &AlignedDataset) -> Result<AlignedDataset> {
    bundle.check_dataset(dataset)?;
    bundle.normalization.apply(dataset)
}

/// Rebuilds the bundle's train/test split and scores its test rows.
pub fn evaluate_bundle(bundle: &Bundle, dataset: &AlignedDataset) -> Result<EvaluationReport> {
    if dataset.len() != bundle.manifest.aligned_rows {
        return Err(Error::BundleMismatch(format!(
            "bundle was trained on {} aligned rows, data has {}",
            bundle.manifest.aligned_rows,
            dataset.len()
        )));
    }
    let normalized = prepare(bundle, dataset)?;
    let (_, test) = split_indices(normalized.labels(), &bundle.manifest.split)?;
    evaluate_model(
        &bundle.model,
        bundle.regressor.as_ref(),
        &normalized.subset(&test),
    )
}

fn write_roc(path: &Path, roc: &RocCurve) -> Result<()> {
    let mut text = String::from("fpr,tpr\n");
    for (f, t) in &roc.points {
        text.push_str(&format!("{f},{t}\n"));
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_residuals(path: &Path, tlx: &TlxReport) -> Result<()> {
    let mut text = String::from("residual\n");
    for r in &tlx.raw.residuals {
        text.push_str(&format!("{r}\n"));
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Directory-name labels for each bundle, suffixed where names repeat.
fn labels(bundles: &[PathBuf]) -> Vec<String> {
    let base: Vec<String> = bundles
        .iter()
        .map(|b| {
            let name = b
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            let parent = b
                .parent()
                .and_then(Path::file_name)
                .map(|n| n.to_string_lossy().into_owned());
            match (name.as_str(), parent) {
                // train writes <out>/bundle, so the parent is the informative part
                ("bundle", Some(p)) => p,
                ("", _) => "bundle".into(),
                _ => name,
            }
        })
        .collect();
    let mut seen = BTreeSet::new();
    base.iter()
        .enumerate()
        .map(|(i, b)| {
            if base.iter().filter(|x| *x == b).count() > 1 || !seen.insert(b.clone()) {
                format!("{b}-{i}")
            } else {
                b.clone()
            }
        })
        .collect()
}

/// Scores every bundle on its own test split of the manifest's data. Writes
/// `<label>/evaluation.json`, `<label>/roc.csv`, optional residuals, and one
/// `comparison.csv` row per bundle.
pub fn evaluate(cfg: &RunConfig) -> Result<Vec<(String, EvaluationReport)>> {
    if cfg.bundle.is_empty() {
        return Err(Error::InvalidConfig(
            "at least one --bundle is required".into(),
        ))
        .stage("config");
    }
    let out_dir = cfg.out_dir_path().stage("config")?;
    let dataset = ingest(cfg.manifest_path().stage("config")?)?.dataset;
    let mut results = Vec::new();
    for (label, path) in labels(&cfg.bundle).into_iter().zip(&cfg.bundle) {
        let bundle = load_bundle(path).stage("load-bundle")?;
        let report = evaluate_bundle(&bundle, &dataset).stage("evaluate")?;
        results.push((label, report));
    }
    let write = || -> Result<()> {
        create_dir(out_dir)?;
        let mut table = String::from(
            "bundle,mode,rows,accuracy,precision,recall,f1,auc,tlx_rmse_normalized,tlx_rmse_raw\n",
        );
        for (label, r) in &results {
            let dir = out_dir.join(label);
            create_dir(&dir)?;
            write_json(&dir.join("evaluation.json"), r)?;
            if let Some(roc) = &r.roc {
                write_roc(&dir.join("roc.csv"), roc)?;
            }
            if let Some(tlx) = &r.tlx {
                write_residuals(&dir.join("residuals.csv"), tlx)?;
            }
            let opt = |v: Option<f64>| v.map(|v| format!("{v:.4}")).unwrap_or_default();
            table.push_str(&format!(
                "{label},{},{},{:.4},{:.4},{:.4},{:.4},{},{},{}\n",
                r.mode,
                r.rows,
                r.report.accuracy,
                r.report.precision,
                r.report.recall,
                r.report.f1,
                opt(r.roc.as_ref().map(|c| c.auc)),
                opt(r.tlx.as_ref().map(|t| t.rmse_normalized)),
                opt(r.tlx.as_ref().map(|t| t.rmse_raw)),
            ));
        }
        let path = out_dir.join("comparison.csv");
        fs::write(&path, table).map_err(|e| Error::io(&path, e))
    };
    write().stage("write")?;
    Ok(results)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub key: String,
    pub probability: f64,
    pub label: u8,
    pub tlx_score: Option<f64>,
}

/// Scores every aligned row and writes `predictions.csv`.
pub fn predict(cfg: &RunConfig) -> Result<Vec<PredictionRow>> {
    let out_dir = cfg.out_dir_path().stage("config")?;
    let bundle_path = cfg.single_bundle().stage("config")?;
    let dataset = ingest(cfg.manifest_path().stage("config")?)?.dataset;
    let bundle = load_bundle(bundle_path).stage("load-bundle")?;
    let rows = (|| -> Result<Vec<PredictionRow>> {
        let normalized = prepare(&bundle, &dataset)?;
        (0..normalized.len())
            .map(|i| {
                let record = normalized.record(i);
                let p = bundle.model.predict_stress(&record)?;
                Ok(PredictionRow {
                    key: normalized.keys()[i].clone(),
                    probability: p.probability,
                    label: p.label,
                    tlx_score: bundle
                        .regressor
                        .as_ref()
                        .map(|r| r.predict_tlx(&record))
                        .transpose()?,
                })
            })
            .collect()
    })()
    .stage("predict")?;
    let write = || -> Result<()> {
        create_dir(out_dir)?;
        let path = out_dir.join("predictions.csv");
        let mut w = csv::Writer::from_path(&path).map_err(|e| Error::csv(&path, e))?;
        let result = (|| -> std::result::Result<(), csv::Error> {
            w.write_record(["key", "probability", "label", "tlx_score"])?;
            for r in &rows {
                w.write_record([
                    r.key.clone(),
                    r.probability.to_string(),
                    r.label.to_string(),
                    r.tlx_score.map(|s| s.to_string()).unwrap_or_default(),
                ])?;
            }
            w.flush()?;
            Ok(())
        })();
        result.map_err(|e| Error::csv(&path, e))
    };
    write().stage("write")?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_are_unique() {
        let paths: Vec<PathBuf> = [
            "runs/early/bundle",
            "runs/late/bundle",
            "x/model",
            "y/model",
        ]
        .iter()
        .map(PathBuf::from)
        .collect();
        assert_eq!(labels(&paths), vec!["early", "late", "model-2", "model-3"]);
    }
}

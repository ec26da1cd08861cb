use std::collections::BTreeMap;
use std::fs;

use serde::{Deserialize, Serialize};

use super::evaluate::evaluate_model;
use super::{create_dir, fit_models, ingest, write_json, RunConfig};
use crate::data::{kfold, normalize, Fold};
use crate::error::{Error, Result, StageExt};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub train_rows: usize,
    pub validation_rows: usize,
    /// Metric name to value; `auc` is absent for single-class folds.
    pub metrics: BTreeMap<String, f64>,
}

/// Mean and sample standard deviation over the folds reporting the metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    pub std: f64,
    pub folds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossvalReport {
    pub k: usize,
    pub seed: u64,
    pub folds: Vec<FoldReport>,
    pub aggregate: BTreeMap<String, Aggregate>,
    /// Validation row indices per fold, for reproducibility checks.
    pub membership: Vec<Vec<usize>>,
}

fn aggregate(values: &[f64]) -> Aggregate {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Aggregate {
        mean,
        std,
        folds: values.len(),
    }
}

fn run_fold(
    cfg: &RunConfig,
    dataset: &crate::data::AlignedDataset,
    i: usize,
    fold: &Fold,
) -> Result<FoldReport> {
    let normalized = normalize(dataset, &fold.train)?;
    let (train, validation) = (
        normalized.subset(&fold.train),
        normalized.subset(&fold.validation),
    );
    let fitted = fit_models(&train, None, cfg, &format!("fold{i}/"))?;
    let eval = evaluate_model(
        &fitted.fusion.model,
        fitted.tlx.as_ref().map(|t| &t.regressor),
        &validation,
    )?;
    let mut metrics = BTreeMap::from([
        ("accuracy".to_string(), eval.report.accuracy),
        ("precision".to_string(), eval.report.precision),
        ("recall".to_string(), eval.report.recall),
        ("f1".to_string(), eval.report.f1),
    ]);
    if let Some(roc) = &eval.roc {
        metrics.insert("auc".into(), roc.auc);
    }
    if let Some(tlx) = &eval.tlx {
        metrics.insert("tlx_rmse_normalized".into(), tlx.rmse_normalized);
    }
    for u in &fitted.unimodal {
        // standalone encoder heads, scored on the same validation rows
        let probs = u
            .encoder
            .probabilities(validation.block(u.encoder.modality())?)?;
        let (_, r) = crate::fusion::classify_at(&probs, validation.labels(), 0.5)?;
        metrics.insert(format!("{}_accuracy", u.encoder.modality()), r.accuracy);
    }
    Ok(FoldReport {
        fold: i,
        train_rows: fold.train.len(),
        validation_rows: fold.validation.len(),
        metrics,
    })
}

/// Runs the full recipe on each of `cfg.k` folds and writes
/// `crossval.json` and `crossval.csv`.
pub fn crossval(cfg: &RunConfig) -> Result<CrossvalReport> {
    cfg.validate().stage("config")?;
    let out_dir = cfg.out_dir_path().stage("config")?;
    let dataset = ingest(cfg.manifest_path().stage("config")?)?.dataset;
    let folds = kfold(dataset.len(), cfg.k, seed::derive(cfg.seed, "kfold")).stage("split")?;
    let reports = folds
        .iter()
        .enumerate()
        .map(|(i, f)| run_fold(cfg, &dataset, i, f))
        .collect::<Result<Vec<_>>>()
        .stage("crossval")?;

    let mut names: Vec<&String> = reports.iter().flat_map(|r| r.metrics.keys()).collect();
    names.sort();
    names.dedup();
    let aggregate: BTreeMap<String, Aggregate> = names
        .into_iter()
        .map(|name| {
            let values: Vec<f64> = reports
                .iter()
                .filter_map(|r| r.metrics.get(name).copied())
                .collect();
            (name.clone(), aggregate(&values))
        })
        .collect();
    let report = CrossvalReport {
        k: cfg.k,
        seed: cfg.seed,
        folds: reports,
        aggregate,
        membership: folds.into_iter().map(|f| f.validation).collect(),
    };
    let write = || -> Result<()> {
        create_dir(out_dir)?;
        write_json(&out_dir.join("crossval.json"), &report)?;
        let mut table = String::from("fold,metric,value\n");
        for f in &report.folds {
            for (name, v) in &f.metrics {
                table.push_str(&format!("{},{name},{v:.4}\n", f.fold));
            }
        }
        for (name, a) in &report.aggregate {
            table.push_str(&format!(
                "mean,{name},{:.4}\nstd,{name},{:.4}\n",
                a.mean, a.std
            ));
        }
        let path = out_dir.join("crossval.csv");
        fs::write(&path, table).map_err(|e| Error::io(&path, e))
    };
    write().stage("write")?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aggregate_mean_and_sample_std() {
        let a = aggregate(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(a.mean, 2.5);
        assert!((a.std - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(aggregate(&[0.7]).std, 0.0);
    }
}
